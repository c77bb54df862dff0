/*
 * crtre — C API for the causal-rule / nonlinear-decorrelation library.
 *
 * All functions return a crtre_status; on failure crtre_last_error() holds a
 * thread-local description. Objects are opaque handles released with the
 * matching *_free function.
 */
#ifndef CRTRE_H
#define CRTRE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CRTRE_API __declspec(dllexport)
#else
#define CRTRE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum crtre_status {
    CRTRE_OK = 0,
    CRTRE_E_INVALID = 1,   /* bad argument or configuration */
    CRTRE_E_PARSE = 2,     /* malformed file or JSON */
    CRTRE_E_SINGULAR = 3,  /* unsolvable linear system */
    CRTRE_E_DIVERGED = 4,  /* iterative solve produced non-finite values */
    CRTRE_E_IO = 5,        /* file system failure */
    CRTRE_E_METRIC = 6,    /* metric undefined on this input */
    CRTRE_E_PARTIAL = 7,   /* experiment finished with failed cells */
    CRTRE_E_INTERNAL = 8
} crtre_status;

typedef struct crtre_dataset crtre_dataset;    /* feature matrix + labels */
typedef struct crtre_itemized crtre_itemized;  /* transaction view */
typedef struct crtre_rules crtre_rules;        /* mined rule list */
typedef struct crtre_weights crtre_weights;    /* sample weights + trajectory */
typedef struct crtre_model crtre_model;        /* linear model parameters */
typedef struct crtre_report crtre_report;      /* experiment report */

CRTRE_API const char* crtre_version(void);
CRTRE_API const char* crtre_last_error(void);

/* ---- datasets ---------------------------------------------------------- */

/* config_json: {"n":..,"p":..,"env":"linear|nonlinear","seed":..,
   "classification":bool, optional "bias":{"r":..,"subset":..,"target":..},
   optional "stable_count", "noise_sd", "covariate_noise_sd", "pool_factor"} */
CRTRE_API crtre_status crtre_synth_generate(const char* config_json, crtre_dataset** out);
CRTRE_API crtre_status crtre_dataset_load_csv(const char* path, const char* label_column,
                                              crtre_dataset** out);
CRTRE_API crtre_status crtre_dataset_save_csv(const crtre_dataset* data, const char* csv_path,
                                              const char* sidecar_json_path);
CRTRE_API crtre_status crtre_dataset_impute_median(crtre_dataset* data);
CRTRE_API size_t crtre_dataset_rows(const crtre_dataset* data);
CRTRE_API size_t crtre_dataset_cols(const crtre_dataset* data);
CRTRE_API crtre_status crtre_dataset_copy_features(const crtre_dataset* data, double* buf,
                                                   size_t len);
CRTRE_API crtre_status crtre_dataset_copy_outcome(const crtre_dataset* data, double* buf,
                                                  size_t len);
CRTRE_API void crtre_dataset_free(crtre_dataset* data);

/* ---- itemization and mining ------------------------------------------- */

CRTRE_API crtre_status crtre_discretize(const crtre_dataset* data, int bins,
                                        crtre_itemized** out);
CRTRE_API crtre_status crtre_itemized_save(const crtre_itemized* data, const char* path);
CRTRE_API crtre_status crtre_itemized_load(const char* path, crtre_itemized** out);
CRTRE_API size_t crtre_itemized_size(const crtre_itemized* data);
CRTRE_API void crtre_itemized_free(crtre_itemized* data);

CRTRE_API crtre_status crtre_mine_rules(const crtre_itemized* data, double min_support,
                                        double min_confidence, int max_len, crtre_rules** out);
CRTRE_API size_t crtre_rules_count(const crtre_rules* rules);
CRTRE_API crtre_status crtre_rules_save_jsonl(const crtre_rules* rules,
                                              const crtre_itemized* vocab, const char* path);
/* Loads rules against (and possibly extending) the vocabulary of `vocab`. */
CRTRE_API crtre_status crtre_rules_load_jsonl(const char* path, crtre_itemized* vocab,
                                              crtre_rules** out);
/* select_json: {"max_rules":..,"min_rules":..,"cv_folds":..,"c_param":..,
   "seed":..}; history_csv may be NULL. */
CRTRE_API crtre_status crtre_select_rules(const crtre_rules* rules, const crtre_itemized* data,
                                          const char* select_json, const char* history_csv,
                                          crtre_rules** out);
CRTRE_API crtre_status crtre_reduce_items(const crtre_rules* rules, const crtre_itemized* data,
                                          const char* select_json, crtre_rules** out);
CRTRE_API void crtre_rules_free(crtre_rules* rules);

/* ---- decorrelation and models ------------------------------------------ */

/* decorr_json mirrors the "decorrelate" block of the experiment config. */
CRTRE_API crtre_status crtre_learn_weights(const crtre_dataset* data, const char* decorr_json,
                                           crtre_weights** out);
CRTRE_API size_t crtre_weights_size(const crtre_weights* w);
CRTRE_API crtre_status crtre_weights_copy(const crtre_weights* w, double* buf, size_t len);
CRTRE_API crtre_status crtre_weights_save_json(const crtre_weights* w, const char* path);
CRTRE_API crtre_status crtre_weights_trajectory_csv(const crtre_weights* w, const char* path);
CRTRE_API void crtre_weights_free(crtre_weights* w);

/* fit_json: {"model":"ols|lasso|ridge|svm|svr|logistic|crtre","task":
   "regression|classification", model-specific knobs, optional
   "decorrelate":{...}}. */
CRTRE_API crtre_status crtre_fit_model(const crtre_dataset* data, const char* fit_json,
                                       crtre_weights** weights_out, crtre_model** model_out);
CRTRE_API crtre_status crtre_model_predict(const crtre_model* model, const crtre_dataset* data,
                                           double* buf, size_t len);
CRTRE_API crtre_status crtre_model_save_json(const crtre_model* model, const char* path);
CRTRE_API size_t crtre_model_coef_count(const crtre_model* model);
CRTRE_API crtre_status crtre_model_copy_coefs(const crtre_model* model, double* buf, size_t len);
CRTRE_API void crtre_model_free(crtre_model* model);

/* ---- experiments -------------------------------------------------------- */

/* config_json is the full experiment config (see README). */
CRTRE_API crtre_status crtre_run_experiment(const char* config_json, crtre_report** out);
/* Re-load a long-form report.csv so it can be re-emitted in other formats. */
CRTRE_API crtre_status crtre_report_read_csv(const char* path, crtre_report** out);
/* formats: comma-separated subset of "csv,json,svg". */
CRTRE_API crtre_status crtre_report_write(const crtre_report* report, const char* out_dir,
                                          const char* formats);
CRTRE_API int crtre_report_has_failures(const crtre_report* report);
CRTRE_API size_t crtre_report_record_count(const crtre_report* report);
CRTRE_API void crtre_report_free(crtre_report* report);

#ifdef __cplusplus
}
#endif

#endif /* CRTRE_H */
