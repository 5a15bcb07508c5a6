#ifndef DMPC_DMPC_H
#define DMPC_DMPC_H

/* C interface to the distributed MPC planner. Every handle is opaque and owned
 * by the caller once returned; release it with the matching *_free function.
 * Functions return a dmpc_status; on failure dmpc_last_error() describes the
 * problem for the calling thread until its next call into the library. */

#include <stddef.h>
#include <stdint.h>

#if defined(DMPC_BUILDING_LIBRARY)
#define DMPC_API __attribute__((visibility("default")))
#else
#define DMPC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dmpc_status {
  DMPC_OK = 0,
  DMPC_ERR_INVALID_ARGUMENT = 1, /* null pointer, bad option value, bad parameters */
  DMPC_ERR_SCHEMA = 2,           /* scenario/config/CSV does not follow its format */
  DMPC_ERR_IO = 3,
  DMPC_ERR_GENERATION = 4,       /* random scenario could not be placed */
  DMPC_ERR_PLANNER = 5,          /* transition ran but did not succeed */
  DMPC_ERR_INTERNAL = 6
} dmpc_status;

typedef enum dmpc_strategy {
  DMPC_SOFT_ON_DEMAND = 0,
  DMPC_HARD_ON_DEMAND = 1,
  DMPC_HARD_FULL_HORIZON = 2
} dmpc_strategy;

typedef struct dmpc_scenario dmpc_scenario;
typedef struct dmpc_result dmpc_result;

typedef struct dmpc_gen_options {
  int n;
  double box[3];       /* used when density <= 0 */
  double density;      /* agents per m^3; > 0 selects a cube */
  uint64_t seed;
  const char* preset;  /* NULL means "default" */
} dmpc_gen_options;

typedef struct dmpc_solve_options {
  dmpc_strategy strategy;
  int clusters;   /* 0: sequential */
  int scale;      /* non-zero: speed up to the acceleration limit */
  uint64_t seed;  /* perturbation seed for degenerate geometry */
} dmpc_solve_options;

typedef struct dmpc_metrics {
  int success;
  const char* reason; /* static string */
  double transition_time_s;
  double wall_time_s;
  double travelled_distance_m;
  double straight_line_distance_m;
  double min_scaled_distance;
  int steps;
  double gamma;
  int qp_failures;
  double max_kkt_residual;
} dmpc_metrics;

typedef struct dmpc_bench_options {
  int trials;
  const int* n_values;
  size_t n_count;
  double density;  /* > 0: density mode */
  double volume;   /* > 0 and density <= 0: fixed cube volume */
  const dmpc_strategy* strategies;
  size_t strategy_count;
  const int* clusters;
  size_t cluster_count;
  uint64_t seed_base;
  const char* preset;        /* NULL means "default" */
  const char* config_json;   /* optional parameter patch, may be NULL */
  int scale;
  int workers;               /* 0: DMPC_WORKERS or hardware concurrency */
  const char* out_path;      /* resumable JSON file, may be NULL */
} dmpc_bench_options;

DMPC_API const char* dmpc_version(void);
DMPC_API const char* dmpc_last_error(void);

DMPC_API void dmpc_gen_options_init(dmpc_gen_options* options);
DMPC_API void dmpc_solve_options_init(dmpc_solve_options* options);
DMPC_API void dmpc_bench_options_init(dmpc_bench_options* options);

DMPC_API dmpc_status dmpc_strategy_parse(const char* text, dmpc_strategy* out);

DMPC_API dmpc_status dmpc_scenario_generate(const dmpc_gen_options* options, dmpc_scenario** out);
/* config_path may be NULL; otherwise a JSON patch {"phys":..., "algo":...}. */
DMPC_API dmpc_status dmpc_scenario_load(const char* path, const char* config_path, dmpc_scenario** out);
DMPC_API dmpc_status dmpc_scenario_save(const dmpc_scenario* scenario, const char* path);
DMPC_API int dmpc_scenario_agent_count(const dmpc_scenario* scenario);
/* Workspace box as {min x, min y, min z, max x, max y, max z}. */
DMPC_API dmpc_status dmpc_scenario_workspace(const dmpc_scenario* scenario, double out[6]);
DMPC_API void dmpc_scenario_free(dmpc_scenario* scenario);

/* Runs a transition. A result is produced even when the planner fails; the
 * status is then DMPC_ERR_PLANNER. */
DMPC_API dmpc_status dmpc_solve(const dmpc_scenario* scenario, const dmpc_solve_options* options,
                                dmpc_result** out);
DMPC_API dmpc_status dmpc_result_metrics(const dmpc_result* result, dmpc_metrics* out);
DMPC_API int dmpc_result_sample_count(const dmpc_result* result);
/* Interpolated sample s of agent i as {t, px, py, pz, vx, vy, vz, ax, ay, az}. */
DMPC_API dmpc_status dmpc_result_sample(const dmpc_result* result, int agent, int sample, double out[10]);
DMPC_API dmpc_status dmpc_result_write_csv(const dmpc_result* result, const char* path);
DMPC_API dmpc_status dmpc_result_write_metrics(const dmpc_result* result, const char* path);
DMPC_API void dmpc_result_free(dmpc_result* result);

/* Verifies a stored trajectory. *passed is set on DMPC_OK; report (may be
 * NULL) receives a message valid until the next call on this thread. */
DMPC_API dmpc_status dmpc_check_csv(const char* csv_path, const dmpc_scenario* scenario, int* passed,
                                    const char** report);

DMPC_API dmpc_status dmpc_bench_run(const dmpc_bench_options* options, const char** summary_json);

#ifdef __cplusplus
}
#endif

#endif
