#ifndef CAPGAP_CAPGAP_H
#define CAPGAP_CAPGAP_H

/* C interface to the capgap library. Objects are opaque handles released with
 * their *_free function. Every fallible call returns a capgap_status; on
 * failure capgap_last_error() describes the problem (per thread). Strings
 * returned through char** are owned by the caller: release them with
 * capgap_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(CAPGAP_BUILDING_LIBRARY)
#define CAPGAP_API __declspec(dllexport)
#else
#define CAPGAP_API __declspec(dllimport)
#endif
#else
#define CAPGAP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum capgap_status {
  CAPGAP_OK = 0,
  CAPGAP_ERR_ARGUMENT = 1, /* value outside the operation's domain */
  CAPGAP_ERR_DATA = 2,     /* malformed input or violated record invariant */
  CAPGAP_ERR_NUMERIC = 3,  /* non-finite values, divergence */
  CAPGAP_ERR_IO = 4,       /* file could not be read or written */
  CAPGAP_ERR_INTERNAL = 5
} capgap_status;

typedef struct capgap_corpus capgap_corpus;
typedef struct capgap_split capgap_split;
typedef struct capgap_embeddings capgap_embeddings;
typedef struct capgap_classifier capgap_classifier;
typedef struct capgap_metrics capgap_metrics;
typedef struct capgap_report_builder capgap_report_builder;
typedef struct capgap_report capgap_report;

CAPGAP_API const char* capgap_version(void);
CAPGAP_API const char* capgap_last_error(void);
CAPGAP_API void capgap_string_free(char* s);

/* ------------------------------------------------------------------ corpus */

/* labels may be NULL (label space = sorted observed labels). */
CAPGAP_API capgap_status capgap_corpus_load(const char* path, const char* const* labels,
                                            size_t n_labels, int threads, capgap_corpus** out);
CAPGAP_API capgap_status capgap_corpus_parse(const char* jsonl, size_t length,
                                             const char* const* labels, size_t n_labels,
                                             int threads, capgap_corpus** out);
CAPGAP_API capgap_status capgap_corpus_save(const capgap_corpus* corpus, const char* path);
CAPGAP_API capgap_status capgap_corpus_serialize(const capgap_corpus* corpus, char** out);
CAPGAP_API void capgap_corpus_free(capgap_corpus* corpus);
CAPGAP_API size_t capgap_corpus_size(const capgap_corpus* corpus);
CAPGAP_API size_t capgap_corpus_label_count(const capgap_corpus* corpus);
/* NULL when index is out of range. Valid while the corpus lives. */
CAPGAP_API const char* capgap_corpus_label(const capgap_corpus* corpus, size_t index);
CAPGAP_API size_t capgap_corpus_image_count(const capgap_corpus* corpus);
/* Records whose variant equals `variant` ("raw", "keyword", ...). */
CAPGAP_API capgap_status capgap_corpus_filter_variant(const capgap_corpus* corpus,
                                                      const char* variant, capgap_corpus** out);
/* Appends `originals` relabelled as `original_label`. */
CAPGAP_API capgap_status capgap_corpus_four_way(const capgap_corpus* corpus,
                                                const capgap_corpus* originals,
                                                const char* original_label, capgap_corpus** out);

/* ------------------------------------------------------------------ split */

CAPGAP_API capgap_status capgap_split_make(const capgap_corpus* corpus, double train_fraction,
                                           uint64_t seed, capgap_split** out);
CAPGAP_API capgap_status capgap_split_load(const char* path, capgap_split** out);
CAPGAP_API capgap_status capgap_split_save(const capgap_split* split, const char* path);
CAPGAP_API void capgap_split_free(capgap_split* split);
CAPGAP_API size_t capgap_split_train_images(const capgap_split* split);
CAPGAP_API size_t capgap_split_test_images(const capgap_split* split);

/* -------------------------------------------------------------- transform */

typedef struct capgap_transform_options {
  const char* kind; /* strip_markdown, strip_special_chars, shuffle_words, shuffle_letters */
  int has_seed;     /* required for the shuffles, rejected otherwise */
  uint64_t seed;
  int global_letters; /* shuffle_letters over the whole text */
  int dash_to_space;  /* strip_special_chars */
} capgap_transform_options;

CAPGAP_API void capgap_transform_options_init(capgap_transform_options* topts);
CAPGAP_API capgap_status capgap_transform_text(const capgap_transform_options* topts, const char* text,
                                               const char* record_key, char** out);
CAPGAP_API capgap_status capgap_transform_corpus(const capgap_corpus* corpus,
                                                 const capgap_transform_options* topts, int threads,
                                                 capgap_corpus** out);

/* -------------------------------------------------------------- synthetic */

typedef struct capgap_synth_config {
  size_t images;
  size_t classes;
  size_t signatures_per_class;
  size_t base_vocab;
  double zipf_exponent;
  double injection_rate;
  double background_rate;
  uint64_t seed;
} capgap_synth_config;

CAPGAP_API void capgap_synth_config_init(capgap_synth_config* config);
CAPGAP_API capgap_status capgap_synth_corpus(const capgap_synth_config* config,
                                             capgap_corpus** out);
/* Gaussian class clusters: class c has mean separation * e_c (centred), in
 * noise-sigma units. */
CAPGAP_API capgap_status capgap_synth_text_embeddings(const capgap_corpus* corpus, size_t dim,
                                                      double separation, uint64_t seed,
                                                      const char* encoder_tag,
                                                      capgap_embeddings** out);
CAPGAP_API capgap_status capgap_synth_image_embeddings(const capgap_embeddings* text, double noise,
                                                       uint64_t seed, const char* encoder_tag,
                                                       const char* generator_tag,
                                                       capgap_embeddings** out);

/* ------------------------------------------------------------------ tf-idf */

typedef struct capgap_tfidf_config {
  int ngram_min;
  int ngram_max;
  size_t min_df;
  size_t max_features; /* 0 = unlimited */
  int use_stopwords;
  int l2_norm;
} capgap_tfidf_config;

/* preset: "classifier" (1..2 grams) or "phrases" (2..3 grams, stopwords). */
CAPGAP_API capgap_status capgap_tfidf_config_init(capgap_tfidf_config* config, const char* preset);

typedef enum capgap_phrase_scoring {
  CAPGAP_SCORING_CLASS_MEAN = 0,
  CAPGAP_SCORING_CLASS_VS_REST = 1
} capgap_phrase_scoring;

/* Top-k distinctive phrases per label as CSV (rank,<label>,...). exclusion_path
 * may be NULL; it is a term list with one term per line. */
CAPGAP_API capgap_status capgap_top_phrases_csv(const capgap_corpus* corpus,
                                                const capgap_tfidf_config* config, size_t k,
                                                const char* exclusion_path,
                                                capgap_phrase_scoring scoring, int threads,
                                                char** out);

/* Word counts for one label. stopwords_path NULL uses the built-in list when
 * use_stopwords is set. format: "csv" or "json". */
CAPGAP_API capgap_status capgap_word_frequencies(const capgap_corpus* corpus, const char* label,
                                                 int use_stopwords, const char* stopwords_path,
                                                 const char* format, char** out);

/* ----------------------------------------------------------------- linear */

typedef struct capgap_train_config {
  double learning_rate;
  double weight_decay;
  int epochs;
  int batch_size;
  uint64_t seed;
  int shuffle_each_epoch;
  double label_smoothing;
  double momentum;
} capgap_train_config;

/* preset: "desk" or "original"; sparse selects the text (TF-IDF) variant. */
CAPGAP_API capgap_status capgap_train_config_init(capgap_train_config* config, const char* preset,
                                                  int sparse);

/* Fits TF-IDF and the classifier on the train side of `split` (all records
 * when split is NULL). */
CAPGAP_API capgap_status capgap_train_text(const capgap_corpus* corpus, const capgap_split* split,
                                           const capgap_tfidf_config* tfidf,
                                           const capgap_train_config* train, int threads,
                                           capgap_classifier** out);
/* Trains on embeddings; corpus (optional) resolves item ids to images. */
CAPGAP_API capgap_status capgap_train_embeddings(const capgap_embeddings* embeddings,
                                                 const capgap_split* split,
                                                 const capgap_corpus* corpus,
                                                 const capgap_train_config* train, int threads,
                                                 capgap_classifier** out);
CAPGAP_API capgap_status capgap_classifier_load(const char* path, capgap_classifier** out);
CAPGAP_API capgap_status capgap_classifier_save(const capgap_classifier* classifier,
                                                const char* path);
CAPGAP_API void capgap_classifier_free(capgap_classifier* classifier);
CAPGAP_API int capgap_classifier_is_text(const capgap_classifier* classifier);

/* Evaluates on the test side of `split` (all records when NULL). */
CAPGAP_API capgap_status capgap_evaluate_text(const capgap_classifier* classifier,
                                              const capgap_corpus* corpus,
                                              const capgap_split* split, int threads,
                                              capgap_metrics** out);
CAPGAP_API capgap_status capgap_evaluate_embeddings(const capgap_classifier* classifier,
                                                    const capgap_embeddings* embeddings,
                                                    const capgap_split* split,
                                                    const capgap_corpus* corpus, int threads,
                                                    capgap_metrics** out);

CAPGAP_API capgap_status capgap_metrics_load(const char* path, capgap_metrics** out);
CAPGAP_API capgap_status capgap_metrics_save(const capgap_metrics* metrics, const char* path);
CAPGAP_API capgap_status capgap_metrics_to_json(const capgap_metrics* metrics, char** out);
CAPGAP_API void capgap_metrics_free(capgap_metrics* metrics);
CAPGAP_API double capgap_metrics_accuracy(const capgap_metrics* metrics);
CAPGAP_API double capgap_metrics_macro_accuracy(const capgap_metrics* metrics);
CAPGAP_API int64_t capgap_metrics_n_test(const capgap_metrics* metrics);
CAPGAP_API capgap_status capgap_metrics_set_context(capgap_metrics* metrics, const char* key,
                                                    const char* value);

/* ------------------------------------------------------------- embeddings */

typedef enum capgap_normalize {
  CAPGAP_NORMALIZE_AUTO = 0, /* when encoder_tag mentions clip */
  CAPGAP_NORMALIZE_ON = 1,
  CAPGAP_NORMALIZE_OFF = 2
} capgap_normalize;

CAPGAP_API capgap_status capgap_embeddings_load(const char* path, capgap_normalize mode,
                                                int threads, capgap_embeddings** out);
CAPGAP_API capgap_status capgap_embeddings_save(const capgap_embeddings* embeddings,
                                                const char* path);
CAPGAP_API void capgap_embeddings_free(capgap_embeddings* embeddings);
CAPGAP_API size_t capgap_embeddings_size(const capgap_embeddings* embeddings);
CAPGAP_API size_t capgap_embeddings_dim(const capgap_embeddings* embeddings);
CAPGAP_API capgap_status capgap_embeddings_four_way(const capgap_embeddings* embeddings,
                                                    const capgap_embeddings* originals,
                                                    const char* original_label,
                                                    capgap_embeddings** out);

/* Linear probe: train side -> test side. generator may be NULL. */
CAPGAP_API capgap_status capgap_probe(const capgap_embeddings* embeddings,
                                      const capgap_split* split, const capgap_corpus* corpus,
                                      const capgap_train_config* train, const char* generator,
                                      int threads, capgap_metrics** out);

/* Keyword-prompt ablation summary as JSON. Image metrics may both be NULL. */
CAPGAP_API capgap_status capgap_keyword_comparison(const capgap_metrics* raw_text,
                                                   const capgap_metrics* keyword_text,
                                                   const capgap_metrics* raw_image,
                                                   const capgap_metrics* keyword_image,
                                                   char** out_json);

/* ------------------------------------------------------------------ match */

typedef struct capgap_match_config {
  size_t dim;
  double tau;
  int identity_init;
  capgap_train_config train;
} capgap_match_config;

CAPGAP_API void capgap_match_config_init(capgap_match_config* config);
CAPGAP_API capgap_status capgap_match_run(const capgap_corpus* corpus,
                                          const capgap_embeddings* text,
                                          const capgap_embeddings* images,
                                          const capgap_split* split,
                                          const capgap_match_config* config, int threads,
                                          char** out_json);

/* ---------------------------------------------------------------- lexicon */

enum {
  CAPGAP_LEXICON_COLORS = 1,
  CAPGAP_LEXICON_TEXTURES = 2,
  CAPGAP_LEXICON_COMPOSITION = 4
};

/* Dictionary statistics as JSON. dictionary_dir may be NULL for the built-in
 * dictionaries; otherwise it holds files named like data/lexicon/. */
CAPGAP_API capgap_status capgap_lexicon_stats(const capgap_corpus* corpus, int sections,
                                              const char* dictionary_dir, int threads,
                                              char** out_json);
/* Table-shaped CSVs from a lexicon JSON; an absent section yields "". */
CAPGAP_API capgap_status capgap_lexicon_tables(const char* lexicon_json, char** table4_csv,
                                               char** table5_csv);

/* Validates a judgment JSONL file against the corpus and summarizes it. */
CAPGAP_API capgap_status capgap_judgments_summarize(const char* path, const capgap_corpus* corpus,
                                                    char** out_json, char** out_ranks_csv);

/* ----------------------------------------------------------------- report */

CAPGAP_API capgap_status capgap_report_builder_new(capgap_report_builder** out);
CAPGAP_API void capgap_report_builder_free(capgap_report_builder* builder);
/* section: "text", "image", "four_way", "transform", "probe". name is used by
 * image/transform/probe and may be NULL for images (generator tag used). */
CAPGAP_API capgap_status capgap_report_add_metrics(capgap_report_builder* builder,
                                                   const char* section, const char* name,
                                                   const capgap_metrics* metrics);
/* section: "keyword", "match", "lexicon", "judgments"; json as written by the
 * corresponding operation. */
CAPGAP_API capgap_status capgap_report_add_json(capgap_report_builder* builder,
                                                const char* section, const char* json);
CAPGAP_API capgap_status capgap_report_add_baseline(capgap_report_builder* builder,
                                                    const char* name, double value);
CAPGAP_API capgap_status capgap_report_assemble(const capgap_report_builder* builder,
                                                capgap_report** out);
CAPGAP_API capgap_status capgap_report_load(const char* path, capgap_report** out);
CAPGAP_API void capgap_report_free(capgap_report* report);
CAPGAP_API double capgap_report_gap(const capgap_report* report);
CAPGAP_API double capgap_report_text_accuracy(const capgap_report* report);
CAPGAP_API double capgap_report_image_accuracy(const capgap_report* report);
CAPGAP_API const char* capgap_report_digest(const capgap_report* report);
CAPGAP_API capgap_status capgap_report_to_json(const capgap_report* report, char** out);
/* formats: comma-separated subset of json,csv,markdown. The written file
 * names are returned newline-separated when out_files is non-NULL. */
CAPGAP_API capgap_status capgap_report_export(const capgap_report* report, const char* dir,
                                              const char* formats, char** out_files);
/* Number of reference checks and how many passed. */
CAPGAP_API void capgap_report_check_counts(const capgap_report* report, size_t* total,
                                           size_t* passed);

#ifdef __cplusplus
}
#endif

#endif /* CAPGAP_CAPGAP_H */
