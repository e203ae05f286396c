#ifndef MPTCPSIM_H
#define MPTCPSIM_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes returned by every entry point. */
enum {
  MPTCPSIM_OK = 0,
  MPTCPSIM_ERR_CONFIG = 1,   /* invalid scenario, overrides, or file */
  MPTCPSIM_ERR_INTERNAL = 2, /* simulator invariant violation */
};

typedef struct mptcpsim_result mptcpsim_result;

/* Run overrides; zero-initialize, then set what you need. */
typedef struct mptcpsim_overrides {
  uint32_t mss;      /* 0: keep scenario value */
  uint64_t seed;     /* applied when has_seed is nonzero */
  int has_seed;
  double duration_s; /* <= 0: keep scenario value */
  const char* mode;  /* NULL: keep; "mptcp" or "tcp" */
} mptcpsim_overrides;

/* Runs a scenario. `scenario` is a builtin name, a path to a JSON file, or
   inline JSON text (detected by a leading '{'). `overrides` may be NULL.
   On success *out owns the artifacts; release with mptcpsim_result_free. */
int mptcpsim_run(const char* scenario, const mptcpsim_overrides* overrides,
                 mptcpsim_result** out);

/* Accessors; returned pointers stay valid until the result is freed. */
const char* mptcpsim_result_name(const mptcpsim_result* r);
const char* mptcpsim_result_trace_csv(const mptcpsim_result* r);
const char* mptcpsim_result_summary_json(const mptcpsim_result* r);
/* Gnuplot script referencing `csv_path` as its data file. */
const char* mptcpsim_result_plot_script(mptcpsim_result* r, const char* csv_path);
void mptcpsim_result_free(mptcpsim_result* r);

/* Newline-separated builtin scenario names; free with mptcpsim_string_free. */
int mptcpsim_list_scenarios(char** out);

/* Plot script for an existing trace CSV; free with mptcpsim_string_free. */
int mptcpsim_plot_script_for_csv(const char* csv_path, char** out);

void mptcpsim_string_free(char* s);

/* Message for this thread's most recent failure ("" when none). */
const char* mptcpsim_last_error(void);

#ifdef __cplusplus
}
#endif

#endif /* MPTCPSIM_H */
