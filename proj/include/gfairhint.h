/* C interface to the gfairhint library.
 *
 * Every entry returns a gfh_status; on failure gfh_last_error() carries a
 * message for the calling thread. Out-parameters are written only on
 * GFH_OK. Strings returned through char** are heap copies; release them
 * with gfh_string_free. Handles are opaque and freed with their matching
 * _free function; freeing NULL is a no-op.
 *
 * Structured inputs (generator specs, oracle specs, experiment configs)
 * travel as JSON text; unknown keys are usage errors.
 */

#ifndef GFAIRHINT_H
#define GFAIRHINT_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  GFH_OK = 0,
  GFH_USAGE = 1,   /* bad arguments, config, or call sequence */
  GFH_DATA = 2,    /* unreadable or malformed input files */
  GFH_NUMERIC = 3  /* NaN/Inf reached a tensor or a loss */
} gfh_status;

/* Message for the last failing call on this thread; empty after success. */
const char* gfh_last_error(void);

void gfh_string_free(char* s);

typedef struct gfh_graph gfh_graph;
typedef struct gfh_oracle gfh_oracle;
typedef struct gfh_hint gfh_hint;
typedef struct gfh_model gfh_model;

/* ---- graphs -------------------------------------------------------- */

/* label_path and split_path may be NULL (unlabeled / untagged). */
gfh_status gfh_graph_load(const char* edge_path, const char* feature_path,
                          const char* label_path, const char* split_path,
                          gfh_graph** out);

/* Stochastic-block-model generator; the handle keeps the ground-truth
 * community of every node for community-mode oracles. */
gfh_status gfh_graph_synth(const char* spec_json, gfh_graph** out);

gfh_status gfh_graph_save(const gfh_graph* g, const char* edge_path,
                          const char* feature_path, const char* label_path,
                          const char* split_path);

gfh_status gfh_graph_info(const gfh_graph* g, char** json_out);

void gfh_graph_free(gfh_graph* g);

/* ---- oracle similarity and the fairness graph ---------------------- */

/* spec_json: {"mode": "feature"|"community"|"pairs"|"classes",
 *             "sim": "cosine"|"euclidean", "path": "..."} */
gfh_status gfh_oracle_build(const gfh_graph* g, const char* spec_json,
                            gfh_oracle** out);

gfh_status gfh_oracle_info(const gfh_oracle* o, char** json_out);

/* Top-k selection for continuous oracles (k ignored for binary ones).
 * save_path may be NULL; json_out reports edges and the implied epsilon. */
gfh_status gfh_fairness_graph_build(const gfh_oracle* o, size_t k,
                                    const char* save_path, char** json_out);

void gfh_oracle_free(gfh_oracle* o);

/* ---- fairness hints ------------------------------------------------ */

/* config_json keys: dim, epochs, lr, val_frac, test_frac, seed,
 * fairness_k, delta. Returns the frozen hints plus a training report
 * with link-prediction AUC and the fairness-bound probe. */
gfh_status gfh_hint_train(const gfh_graph* g, const gfh_oracle* o,
                          const char* config_json, gfh_hint** out,
                          char** report_json);

gfh_status gfh_hint_save(const gfh_hint* h, const char* path);
gfh_status gfh_hint_load(const char* path, gfh_hint** out);
gfh_status gfh_hint_info(const gfh_hint* h, char** json_out);
void gfh_hint_free(gfh_hint* h);

/* ---- training and evaluation --------------------------------------- */

/* config_json: experiment config (see gfh_experiment_run); trains the
 * first seed only. hints may be NULL for methods that take none. A run
 * that aborts on a numeric failure still returns GFH_OK: the report
 * carries "aborted" and the model is the last surviving checkpoint. */
gfh_status gfh_train(const gfh_graph* g, const gfh_oracle* o,
                     const gfh_hint* hints, const char* config_json,
                     gfh_model** out, char** report_json);

gfh_status gfh_model_save(const gfh_model* m, const char* path);
gfh_status gfh_model_load(const char* path, gfh_model** out);

/* test_only nonzero restricts ranking metrics to the test split. */
gfh_status gfh_evaluate(const gfh_model* m, const gfh_graph* g,
                        const gfh_oracle* o, const gfh_hint* hints, size_t k,
                        int test_only, char** json_out);

/* Saliency scores of the utility and hint inputs; needs an mlp head. */
gfh_status gfh_importance(const gfh_model* m, const gfh_graph* g,
                          const gfh_hint* hints, char** json_out);

void gfh_model_free(gfh_model* m);

/* ---- orchestration -------------------------------------------------- */

/* config_json keys: method, oracle{mode,sim,path}, fairness_k, hint{...},
 * backbone{...}, train{...}, seeds[...], custom_shape, cache_dir.
 * Runs every seed, returns per-seed rows plus a mean/std summary with the
 * resolved config echoed back. model_out saves the trained model
 * (single-seed configs only) and may be NULL. */
gfh_status gfh_experiment_run(const gfh_graph* g, const char* config_json,
                              const char* model_out, char** json_out);

gfh_status gfh_sweep_gamma(const gfh_graph* g, const char* config_json,
                           const double* gammas, size_t n_gammas,
                           char** json_out);

gfh_status gfh_sweep_k(const gfh_graph* g, const char* config_json,
                       const size_t* ks, size_t n_ks, char** json_out);

/* configs_json: JSON array of experiment configs (at least two). */
gfh_status gfh_benchmark(const gfh_graph* g, const char* configs_json,
                         size_t epochs, char** json_out);

#ifdef __cplusplus
}
#endif

#endif /* GFAIRHINT_H */
