#include "capgap/capgap.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "capgap/corpus.hpp"
#include "capgap/errors.hpp"
#include "capgap/features.hpp"
#include "capgap/lexicon.hpp"
#include "capgap/linear.hpp"
#include "capgap/match.hpp"
#include "capgap/probe.hpp"
#include "capgap/report.hpp"
#include "capgap/synthetic.hpp"
#include "capgap/text.hpp"
#include "capgap/transform.hpp"

#ifndef CAPGAP_VERSION_STRING
#define CAPGAP_VERSION_STRING "0.1.0"
#endif

struct capgap_corpus {
  capgap::Corpus value;
};
struct capgap_split {
  capgap::SplitAssignment value;
};
struct capgap_embeddings {
  capgap::EmbeddingSet value;
};
struct capgap_classifier {
  capgap::Classifier value;
};
struct capgap_metrics {
  capgap::Metrics value;
};
struct capgap_report_builder {
  capgap::ReportInputs value;
};
struct capgap_report {
  capgap::GapReport value;
};

namespace {

thread_local std::string last_error;

template <class Fn>
capgap_status guard(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return CAPGAP_OK;
  } catch (const capgap::ArgumentError& e) {
    last_error = e.what();
    return CAPGAP_ERR_ARGUMENT;
  } catch (const capgap::DataError& e) {
    last_error = e.what();
    return CAPGAP_ERR_DATA;
  } catch (const capgap::NumericError& e) {
    last_error = e.what();
    return CAPGAP_ERR_NUMERIC;
  } catch (const std::filesystem::filesystem_error& e) {
    last_error = e.what();
    return CAPGAP_ERR_IO;
  } catch (const std::invalid_argument& e) {
    last_error = e.what();
    return CAPGAP_ERR_ARGUMENT;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return CAPGAP_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return CAPGAP_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) throw capgap::ArgumentError(std::string(what) + " must not be NULL");
}

char* dup(std::string_view s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

std::optional<capgap::LabelSpace> label_space(const char* const* labels, size_t n) {
  if (!labels) return std::nullopt;
  std::vector<std::string> v;
  for (size_t i = 0; i < n; ++i) {
    need(labels[i], "label");
    v.emplace_back(labels[i]);
  }
  return capgap::LabelSpace(std::move(v));
}

capgap::TfIdfConfig to_cpp(const capgap_tfidf_config& c) {
  capgap::TfIdfConfig out;
  out.ngram_min = c.ngram_min;
  out.ngram_max = c.ngram_max;
  out.min_df = c.min_df;
  out.max_features = c.max_features == 0 ? std::nullopt : std::optional<std::size_t>(c.max_features);
  out.use_stopwords = c.use_stopwords != 0;
  out.norm = c.l2_norm ? capgap::TermNorm::kL2 : capgap::TermNorm::kNone;
  out.validate();
  return out;
}

capgap::TrainConfig to_cpp(const capgap_train_config& c) {
  capgap::TrainConfig out;
  out.learning_rate = c.learning_rate;
  out.weight_decay = c.weight_decay;
  out.epochs = c.epochs;
  out.batch_size = c.batch_size;
  out.seed = c.seed;
  out.shuffle_each_epoch = c.shuffle_each_epoch != 0;
  out.label_smoothing = c.label_smoothing;
  out.momentum = c.momentum;
  out.validate();
  return out;
}

void from_cpp(const capgap::TrainConfig& c, capgap_train_config* out) {
  out->learning_rate = c.learning_rate;
  out->weight_decay = c.weight_decay;
  out->epochs = c.epochs;
  out->batch_size = c.batch_size;
  out->seed = c.seed;
  out->shuffle_each_epoch = c.shuffle_each_epoch ? 1 : 0;
  out->label_smoothing = c.label_smoothing;
  out->momentum = c.momentum;
}

capgap::TransformOptions to_cpp(const capgap_transform_options& s) {
  need(s.kind, "transform kind");
  const auto kind = capgap::parse_transform_kind(s.kind);
  if (!kind) throw capgap::ArgumentError(std::string("unknown transform '") + s.kind + "'");
  capgap::TransformOptions out;
  out.kind = *kind;
  if (s.has_seed) out.seed = s.seed;
  out.global_letters = s.global_letters != 0;
  out.dash_to_space = s.dash_to_space != 0;
  out.validate();
  return out;
}

capgap::NormalizeMode to_cpp(capgap_normalize m) {
  switch (m) {
    case CAPGAP_NORMALIZE_AUTO:
      return capgap::NormalizeMode::kAuto;
    case CAPGAP_NORMALIZE_ON:
      return capgap::NormalizeMode::kOn;
    case CAPGAP_NORMALIZE_OFF:
      return capgap::NormalizeMode::kOff;
  }
  throw capgap::ArgumentError("unknown normalization mode");
}

std::vector<std::size_t> all_records(const capgap::Corpus& corpus) {
  std::vector<std::size_t> v(corpus.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
  return v;
}

}  // namespace

extern "C" {

const char* capgap_version(void) { return CAPGAP_VERSION_STRING; }
const char* capgap_last_error(void) { return last_error.c_str(); }
void capgap_string_free(char* s) { std::free(s); }

// ------------------------------------------------------------------- corpus

capgap_status capgap_corpus_load(const char* path, const char* const* labels, size_t n_labels,
                                 int threads, capgap_corpus** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new capgap_corpus{capgap::load_corpus(path, label_space(labels, n_labels), threads)};
  });
}

capgap_status capgap_corpus_parse(const char* jsonl, size_t length, const char* const* labels,
                                  size_t n_labels, int threads, capgap_corpus** out) {
  return guard([&] {
    need(jsonl, "jsonl");
    need(out, "out");
    *out = new capgap_corpus{capgap::parse_corpus(std::string_view(jsonl, length),
                                                  label_space(labels, n_labels), threads)};
  });
}

capgap_status capgap_corpus_save(const capgap_corpus* corpus, const char* path) {
  return guard([&] {
    need(corpus, "corpus");
    need(path, "path");
    capgap::save_corpus(corpus->value, path);
  });
}

capgap_status capgap_corpus_serialize(const capgap_corpus* corpus, char** out) {
  return guard([&] {
    need(corpus, "corpus");
    need(out, "out");
    *out = dup(capgap::serialize_corpus(corpus->value));
  });
}

void capgap_corpus_free(capgap_corpus* corpus) { delete corpus; }
size_t capgap_corpus_size(const capgap_corpus* corpus) { return corpus ? corpus->value.size() : 0; }
size_t capgap_corpus_label_count(const capgap_corpus* corpus) {
  return corpus ? corpus->value.labels().size() : 0;
}
const char* capgap_corpus_label(const capgap_corpus* corpus, size_t index) {
  if (!corpus || index >= corpus->value.labels().size()) return nullptr;
  return corpus->value.labels().label(index).c_str();
}
size_t capgap_corpus_image_count(const capgap_corpus* corpus) {
  return corpus ? corpus->value.image_ids().size() : 0;
}

capgap_status capgap_corpus_filter_variant(const capgap_corpus* corpus, const char* variant,
                                           capgap_corpus** out) {
  return guard([&] {
    need(corpus, "corpus");
    need(variant, "variant");
    need(out, "out");
    const auto v = capgap::parse_variant(variant);
    if (!v) throw capgap::ArgumentError(std::string("unknown variant '") + variant + "'");
    std::vector<capgap::CaptionRecord> kept;
    for (const auto& r : corpus->value.records()) {
      if (r.variant == *v) kept.push_back(r);
    }
    if (kept.empty()) throw capgap::DataError(std::string("no records with variant ") + variant);
    *out = new capgap_corpus{capgap::Corpus(std::move(kept), corpus->value.labels())};
  });
}

capgap_status capgap_corpus_four_way(const capgap_corpus* corpus, const capgap_corpus* originals,
                                     const char* original_label, capgap_corpus** out) {
  return guard([&] {
    need(corpus, "corpus");
    need(originals, "originals");
    need(original_label, "original_label");
    need(out, "out");
    *out = new capgap_corpus{
        capgap::make_four_way(corpus->value, originals->value.records(), original_label)};
  });
}

// -------------------------------------------------------------------- split

capgap_status capgap_split_make(const capgap_corpus* corpus, double train_fraction, uint64_t seed,
                                capgap_split** out) {
  return guard([&] {
    need(corpus, "corpus");
    need(out, "out");
    *out = new capgap_split{capgap::grouped_split(corpus->value, train_fraction, seed)};
  });
}

capgap_status capgap_split_load(const char* path, capgap_split** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new capgap_split{capgap::load_split(path)};
  });
}

capgap_status capgap_split_save(const capgap_split* split, const char* path) {
  return guard([&] {
    need(split, "split");
    need(path, "path");
    capgap::save_split(split->value, path);
  });
}

void capgap_split_free(capgap_split* split) { delete split; }
size_t capgap_split_train_images(const capgap_split* split) {
  return split ? split->value.train_images() : 0;
}
size_t capgap_split_test_images(const capgap_split* split) {
  return split ? split->value.test_images() : 0;
}

// ---------------------------------------------------------------- transform

void capgap_transform_options_init(capgap_transform_options* topts) {
  if (!topts) return;
  topts->kind = "strip_markdown";
  topts->has_seed = 0;
  topts->seed = 0;
  topts->global_letters = 0;
  topts->dash_to_space = 1;
}

capgap_status capgap_transform_text(const capgap_transform_options* topts, const char* text,
                                    const char* record_key, char** out) {
  return guard([&] {
    need(topts, "topts");
    need(text, "text");
    need(out, "out");
    *out = dup(capgap::apply_transform(to_cpp(*topts), text, record_key ? record_key : ""));
  });
}

capgap_status capgap_transform_corpus(const capgap_corpus* corpus,
                                      const capgap_transform_options* topts, int threads,
                                      capgap_corpus** out) {
  return guard([&] {
    need(corpus, "corpus");
    need(topts, "topts");
    need(out, "out");
    *out = new capgap_corpus{capgap::transform_corpus(corpus->value, to_cpp(*topts), threads)};
  });
}

// ---------------------------------------------------------------- synthetic

void capgap_synth_config_init(capgap_synth_config* config) {
  if (!config) return;
  const capgap::SyntheticConfig d;
  config->images = d.images;
  config->classes = d.classes;
  config->signatures_per_class = d.signatures_per_class;
  config->base_vocab = d.base_vocab;
  config->zipf_exponent = d.zipf_exponent;
  config->injection_rate = d.injection_rate;
  config->background_rate = d.background_rate;
  config->seed = d.seed;
}

capgap_status capgap_synth_corpus(const capgap_synth_config* config, capgap_corpus** out) {
  return guard([&] {
    need(config, "config");
    need(out, "out");
    capgap::SyntheticConfig c;
    c.images = config->images;
    c.classes = config->classes;
    c.signatures_per_class = config->signatures_per_class;
    c.base_vocab = config->base_vocab;
    c.zipf_exponent = config->zipf_exponent;
    c.injection_rate = config->injection_rate;
    c.background_rate = config->background_rate;
    c.seed = config->seed;
    *out = new capgap_corpus{capgap::generate_fingerprint_corpus(c)};
  });
}

capgap_status capgap_synth_text_embeddings(const capgap_corpus* corpus, size_t dim,
                                           double separation, uint64_t seed,
                                           const char* encoder_tag, capgap_embeddings** out) {
  return guard([&] {
    need(corpus, "corpus");
    need(encoder_tag, "encoder_tag");
    need(out, "out");
    *out = new capgap_embeddings{
        capgap::generate_text_embeddings(corpus->value, dim, separation, seed, encoder_tag)};
  });
}

capgap_status capgap_synth_image_embeddings(const capgap_embeddings* text, double noise,
                                            uint64_t seed, const char* encoder_tag,
                                            const char* generator_tag, capgap_embeddings** out) {
  return guard([&] {
    need(text, "text");
    need(encoder_tag, "encoder_tag");
    need(generator_tag, "generator_tag");
    need(out, "out");
    *out = new capgap_embeddings{capgap::generate_image_embeddings(text->value, noise, seed,
                                                                   encoder_tag, generator_tag)};
  });
}

// ------------------------------------------------------------------- tf-idf

capgap_status capgap_tfidf_config_init(capgap_tfidf_config* config, const char* preset) {
  return guard([&] {
    need(config, "config");
    const std::string p = preset ? preset : "classifier";
    capgap::TfIdfConfig c;
    if (p == "classifier") {
      c = capgap::TfIdfConfig::classifier();
    } else if (p == "phrases") {
      c = capgap::TfIdfConfig::phrases();
    } else {
      throw capgap::ArgumentError("unknown tf-idf preset '" + p + "'");
    }
    config->ngram_min = c.ngram_min;
    config->ngram_max = c.ngram_max;
    config->min_df = c.min_df;
    config->max_features = c.max_features.value_or(0);
    config->use_stopwords = c.use_stopwords ? 1 : 0;
    config->l2_norm = c.norm == capgap::TermNorm::kL2 ? 1 : 0;
  });
}

capgap_status capgap_top_phrases_csv(const capgap_corpus* corpus, const capgap_tfidf_config* config,
                                     size_t k, const char* exclusion_path,
                                     capgap_phrase_scoring scoring, int threads, char** out) {
  return guard([&] {
    need(corpus, "corpus");
    need(config, "config");
    need(out, "out");
    const auto cfg = to_cpp(*config);
    std::vector<std::string> docs;
    docs.reserve(corpus->value.size());
    for (const auto& r : corpus->value.records()) docs.push_back(r.text);
    const auto model = capgap::TfIdfModel::fit(docs, cfg, nullptr, threads);
    const capgap::TermSet exclusion =
        exclusion_path ? capgap::load_term_list(exclusion_path) : capgap::TermSet{};
    const auto mode = scoring == CAPGAP_SCORING_CLASS_VS_REST
                          ? capgap::PhraseScoring::kClassVsRestRatio
                          : capgap::PhraseScoring::kClassMean;
    const auto table = capgap::top_phrases_per_class(corpus->value, model, k, exclusion, mode, threads);
    *out = dup(capgap::phrases_table_csv(table));
  });
}

capgap_status capgap_word_frequencies(const capgap_corpus* corpus, const char* label,
                                      int use_stopwords, const char* stopwords_path,
                                      const char* format, char** out) {
  return guard([&] {
    need(corpus, "corpus");
    need(label, "label");
    need(out, "out");
    capgap::TermSet stop;
    if (stopwords_path) {
      stop = capgap::load_term_list(stopwords_path);
    } else if (use_stopwords) {
      stop = capgap::default_stopwords();
    }
    const auto counts = capgap::word_frequencies(corpus->value, label, stop);
    const std::string f = format ? format : "csv";
    if (f == "csv") {
      *out = dup(capgap::word_frequencies_csv(counts));
    } else if (f == "json") {
      *out = dup(capgap::word_frequencies_json(counts));
    } else {
      throw capgap::ArgumentError("unknown format '" + f + "'");
    }
  });
}

// ------------------------------------------------------------------- linear

capgap_status capgap_train_config_init(capgap_train_config* config, const char* preset,
                                       int sparse) {
  return guard([&] {
    need(config, "config");
    from_cpp(capgap::TrainConfig::preset(preset ? preset : "desk", sparse != 0), config);
  });
}

capgap_status capgap_train_text(const capgap_corpus* corpus, const capgap_split* split,
                                const capgap_tfidf_config* tfidf, const capgap_train_config* train,
                                int threads, capgap_classifier** out) {
  return guard([&] {
    need(corpus, "corpus");
    need(tfidf, "tfidf");
    need(train, "train");
    need(out, "out");
    const auto rows = split ? capgap::records_on_side(corpus->value, split->value, capgap::Side::kTrain)
                            : all_records(corpus->value);
    *out = new capgap_classifier{capgap::train_text_classifier(corpus->value, rows, to_cpp(*tfidf),
                                                               to_cpp(*train), threads)};
  });
}

capgap_status capgap_train_embeddings(const capgap_embeddings* embeddings, const capgap_split* split,
                                      const capgap_corpus* corpus, const capgap_train_config* train,
                                      int threads, capgap_classifier** out) {
  return guard([&] {
    need(embeddings, "embeddings");
    need(train, "train");
    need(out, "out");
    const auto& set = embeddings->value;
    const auto rows = split ? capgap::rows_on_side(set, split->value, corpus ? &corpus->value : nullptr,
                                                   capgap::Side::kTrain)
                            : capgap::rows_by_item_id(set);
    if (rows.empty()) throw capgap::DataError("no training embeddings");
    std::vector<std::size_t> y;
    const auto x = capgap::embedding_features(set, rows, &y);
    auto result = capgap::train(x, y, set.labels(), to_cpp(*train), threads);
    *out = new capgap_classifier{capgap::Classifier{std::move(result.model), std::nullopt}};
  });
}

capgap_status capgap_classifier_load(const char* path, capgap_classifier** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new capgap_classifier{capgap::Classifier::load(path)};
  });
}

capgap_status capgap_classifier_save(const capgap_classifier* classifier, const char* path) {
  return guard([&] {
    need(classifier, "classifier");
    need(path, "path");
    classifier->value.save(path);
  });
}

void capgap_classifier_free(capgap_classifier* classifier) { delete classifier; }
int capgap_classifier_is_text(const capgap_classifier* classifier) {
  return classifier && classifier->value.tfidf ? 1 : 0;
}

capgap_status capgap_evaluate_text(const capgap_classifier* classifier, const capgap_corpus* corpus,
                                   const capgap_split* split, int threads, capgap_metrics** out) {
  return guard([&] {
    need(classifier, "classifier");
    need(corpus, "corpus");
    need(out, "out");
    const auto rows = split ? capgap::records_on_side(corpus->value, split->value, capgap::Side::kTest)
                            : all_records(corpus->value);
    if (rows.empty()) throw capgap::DataError("no test records");
    *out = new capgap_metrics{capgap::evaluate_text(classifier->value, corpus->value, rows, threads)};
  });
}

capgap_status capgap_evaluate_embeddings(const capgap_classifier* classifier,
                                         const capgap_embeddings* embeddings,
                                         const capgap_split* split, const capgap_corpus* corpus,
                                         int threads, capgap_metrics** out) {
  return guard([&] {
    need(classifier, "classifier");
    need(embeddings, "embeddings");
    need(out, "out");
    const auto& model = classifier->value.linear;
    if (classifier->value.tfidf) throw capgap::ArgumentError("classifier expects text input");
    const auto& set = embeddings->value;
    if (!(set.labels() == model.labels())) {
      throw capgap::DataError("embedding labels do not match the classifier's label space");
    }
    if (set.dim() != model.dim()) {
      throw capgap::DataError("embedding dimension " + std::to_string(set.dim()) +
                              " does not match the classifier (" + std::to_string(model.dim()) + ")");
    }
    const auto rows = split ? capgap::rows_on_side(set, split->value, corpus ? &corpus->value : nullptr,
                                                   capgap::Side::kTest)
                            : capgap::rows_by_item_id(set);
    if (rows.empty()) throw capgap::DataError("no test embeddings");
    std::vector<std::size_t> y;
    const auto x = capgap::embedding_features(set, rows, &y);
    auto metrics = capgap::evaluate(model, x, y, threads);
    auto& ctx = metrics.context();
    ctx["features"] = "embedding";
    ctx["encoder_tag"] = set.encoder_tags();
    if (const auto g = set.generator_tags(); !g.empty()) ctx["generator_tag"] = g;
    ctx["normalized"] = set.normalized() ? "true" : "false";
    if (model.config()) ctx["train_config_hash"] = model.config()->hash();
    *out = new capgap_metrics{std::move(metrics)};
  });
}

capgap_status capgap_metrics_load(const char* path, capgap_metrics** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new capgap_metrics{capgap::Metrics::load(path)};
  });
}

capgap_status capgap_metrics_save(const capgap_metrics* metrics, const char* path) {
  return guard([&] {
    need(metrics, "metrics");
    need(path, "path");
    metrics->value.save(path);
  });
}

capgap_status capgap_metrics_to_json(const capgap_metrics* metrics, char** out) {
  return guard([&] {
    need(metrics, "metrics");
    need(out, "out");
    *out = dup(metrics->value.to_json());
  });
}

void capgap_metrics_free(capgap_metrics* metrics) { delete metrics; }
double capgap_metrics_accuracy(const capgap_metrics* metrics) {
  return metrics ? metrics->value.overall_accuracy() : std::nan("");
}
double capgap_metrics_macro_accuracy(const capgap_metrics* metrics) {
  return metrics ? metrics->value.macro_accuracy() : std::nan("");
}
int64_t capgap_metrics_n_test(const capgap_metrics* metrics) {
  return metrics ? metrics->value.n_test() : 0;
}

capgap_status capgap_metrics_set_context(capgap_metrics* metrics, const char* key,
                                         const char* value) {
  return guard([&] {
    need(metrics, "metrics");
    need(key, "key");
    need(value, "value");
    metrics->value.context()[key] = value;
  });
}

// --------------------------------------------------------------- embeddings

capgap_status capgap_embeddings_load(const char* path, capgap_normalize mode, int threads,
                                     capgap_embeddings** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new capgap_embeddings{capgap::load_embeddings(path, to_cpp(mode), threads)};
  });
}

capgap_status capgap_embeddings_save(const capgap_embeddings* embeddings, const char* path) {
  return guard([&] {
    need(embeddings, "embeddings");
    need(path, "path");
    capgap::save_embeddings(embeddings->value, path);
  });
}

void capgap_embeddings_free(capgap_embeddings* embeddings) { delete embeddings; }
size_t capgap_embeddings_size(const capgap_embeddings* embeddings) {
  return embeddings ? embeddings->value.size() : 0;
}
size_t capgap_embeddings_dim(const capgap_embeddings* embeddings) {
  return embeddings ? embeddings->value.dim() : 0;
}

capgap_status capgap_embeddings_four_way(const capgap_embeddings* embeddings,
                                         const capgap_embeddings* originals,
                                         const char* original_label, capgap_embeddings** out) {
  return guard([&] {
    need(embeddings, "embeddings");
    need(originals, "originals");
    need(original_label, "original_label");
    need(out, "out");
    *out = new capgap_embeddings{
        capgap::make_four_way(embeddings->value, originals->value, original_label)};
  });
}

capgap_status capgap_probe(const capgap_embeddings* embeddings, const capgap_split* split,
                           const capgap_corpus* corpus, const capgap_train_config* train,
                           const char* generator, int threads, capgap_metrics** out) {
  return guard([&] {
    need(embeddings, "embeddings");
    need(split, "split");
    need(train, "train");
    need(out, "out");
    capgap::ProbeOptions options;
    options.train = to_cpp(*train);
    if (generator) options.generator = generator;
    *out = new capgap_metrics{capgap::probe_train_eval(
        embeddings->value, split->value, corpus ? &corpus->value : nullptr, options, threads)};
  });
}

capgap_status capgap_keyword_comparison(const capgap_metrics* raw_text,
                                        const capgap_metrics* keyword_text,
                                        const capgap_metrics* raw_image,
                                        const capgap_metrics* keyword_image, char** out_json) {
  return guard([&] {
    need(raw_text, "raw_text");
    need(keyword_text, "keyword_text");
    need(out_json, "out_json");
    if ((raw_image == nullptr) != (keyword_image == nullptr)) {
      throw capgap::ArgumentError("give both image metrics or neither");
    }
    std::optional<capgap::Metrics> ri, ki;
    if (raw_image) {
      ri = raw_image->value;
      ki = keyword_image->value;
    }
    *out_json = dup(
        capgap::keyword_comparison(raw_text->value, keyword_text->value, ri, ki).to_json());
  });
}

// -------------------------------------------------------------------- match

void capgap_match_config_init(capgap_match_config* config) {
  if (!config) return;
  const capgap::MatchConfig d;
  config->dim = d.dim;
  config->tau = d.tau;
  config->identity_init = d.init == capgap::MatchInit::kIdentity ? 1 : 0;
  from_cpp(d.train, &config->train);
}

capgap_status capgap_match_run(const capgap_corpus* corpus, const capgap_embeddings* text,
                               const capgap_embeddings* images, const capgap_split* split,
                               const capgap_match_config* config, int threads, char** out_json) {
  return guard([&] {
    need(corpus, "corpus");
    need(text, "text");
    need(images, "images");
    need(split, "split");
    need(config, "config");
    need(out_json, "out_json");
    capgap::MatchConfig c;
    c.dim = config->dim;
    c.tau = config->tau;
    c.init = config->identity_init ? capgap::MatchInit::kIdentity : capgap::MatchInit::kRandom;
    c.train = to_cpp(config->train);
    c.validate();
    *out_json = dup(
        capgap::run_match(corpus->value, text->value, images->value, split->value, c, threads)
            .to_json());
  });
}

// ------------------------------------------------------------------ lexicon

capgap_status capgap_lexicon_stats(const capgap_corpus* corpus, int sections,
                                   const char* dictionary_dir, int threads, char** out_json) {
  return guard([&] {
    need(corpus, "corpus");
    need(out_json, "out_json");
    capgap::LexiconSections s;
    s.colors = (sections & CAPGAP_LEXICON_COLORS) != 0;
    s.textures = (sections & CAPGAP_LEXICON_TEXTURES) != 0;
    s.composition = (sections & CAPGAP_LEXICON_COMPOSITION) != 0;
    if (!s.colors && !s.textures && !s.composition) {
      throw capgap::ArgumentError("select at least one lexicon section");
    }
    if (!dictionary_dir) {
      *out_json = dup(capgap::corpus_stats(corpus->value, s, capgap::default_color_lexicon(),
                                           capgap::default_texture_lexicon(),
                                           capgap::default_composition_lexicon(), threads)
                          .to_json());
      return;
    }
    const std::filesystem::path dir(dictionary_dir);
    auto list = [&](const char* name) { return capgap::load_lexicon_file(dir / name); };
    auto optional_list = [&](const char* name) -> std::optional<capgap::TermList> {
      if (!std::filesystem::exists(dir / name)) return std::nullopt;
      return list(name);
    };
    const auto colors = s.colors ? capgap::PhraseLexicon(list("color_basic.txt"),
                                                         list("color_nuanced.txt"),
                                                         optional_list("color_modifiers.txt"))
                                 : capgap::default_color_lexicon();
    const auto textures = s.textures ? capgap::PhraseLexicon(list("texture_basic.txt"),
                                                             list("texture_nuanced.txt"),
                                                             optional_list("texture_modifiers.txt"))
                                     : capgap::default_texture_lexicon();
    const auto composition =
        s.composition
            ? capgap::CompositionLexicon({list("composition_spatial_layers.txt"),
                                          list("composition_subject_focus.txt"),
                                          list("composition_guiding_elements.txt"),
                                          list("composition_balance_symmetry.txt")})
            : capgap::default_composition_lexicon();
    *out_json = dup(
        capgap::corpus_stats(corpus->value, s, colors, textures, composition, threads).to_json());
  });
}

capgap_status capgap_lexicon_tables(const char* lexicon_json, char** table4_csv,
                                    char** table5_csv) {
  return guard([&] {
    need(lexicon_json, "lexicon_json");
    need(table4_csv, "table4_csv");
    need(table5_csv, "table5_csv");
    const auto report = capgap::LexiconReport::from_json(lexicon_json);
    const bool t4 = report.has_color() || report.has_texture();
    std::string a = t4 ? report.table4_csv() : "";
    std::string b = report.has_composition() ? report.table5_csv() : "";
    *table4_csv = dup(a);
    try {
      *table5_csv = dup(b);
    } catch (...) {
      std::free(*table4_csv);
      *table4_csv = nullptr;
      throw;
    }
  });
}

capgap_status capgap_judgments_summarize(const char* path, const capgap_corpus* corpus,
                                         char** out_json, char** out_ranks_csv) {
  return guard([&] {
    need(path, "path");
    need(corpus, "corpus");
    need(out_json, "out_json");
    const auto judgments = capgap::load_judgments(path, corpus->value);
    const auto summary = capgap::summarize_judgments(judgments, corpus->value);
    const std::string csv = summary.ranks.empty() ? "" : summary.ranks_csv();
    *out_json = dup(summary.to_json());
    if (out_ranks_csv) {
      try {
        *out_ranks_csv = dup(csv);
      } catch (...) {
        std::free(*out_json);
        *out_json = nullptr;
        throw;
      }
    }
  });
}

// ------------------------------------------------------------------- report

capgap_status capgap_report_builder_new(capgap_report_builder** out) {
  return guard([&] {
    need(out, "out");
    *out = new capgap_report_builder{};
  });
}

void capgap_report_builder_free(capgap_report_builder* builder) { delete builder; }

capgap_status capgap_report_add_metrics(capgap_report_builder* builder, const char* section,
                                        const char* name, const capgap_metrics* metrics) {
  return guard([&] {
    need(builder, "builder");
    need(section, "section");
    need(metrics, "metrics");
    auto& in = builder->value;
    const std::string s = section;
    const std::string n = name ? name : "";
    if (s == "text") {
      if (in.text) throw capgap::ArgumentError("text metrics already set");
      in.text = metrics->value;
    } else if (s == "four_way") {
      if (in.four_way) throw capgap::ArgumentError("four-way metrics already set");
      in.four_way = metrics->value;
    } else if (s == "image") {
      in.images.push_back({n, metrics->value});
    } else if (s == "transform" || s == "probe") {
      if (n.empty()) throw capgap::ArgumentError(s + " metrics need a name");
      (s == "transform" ? in.transforms : in.probes).push_back({n, metrics->value});
    } else {
      throw capgap::ArgumentError("unknown metrics section '" + s + "'");
    }
  });
}

capgap_status capgap_report_add_json(capgap_report_builder* builder, const char* section,
                                     const char* json) {
  return guard([&] {
    need(builder, "builder");
    need(section, "section");
    need(json, "json");
    auto& in = builder->value;
    const std::string s = section;
    if (s == "keyword") {
      in.keyword = capgap::KeywordComparison::from_json(json);
    } else if (s == "match") {
      in.match = capgap::MatchReport::from_json(json);
    } else if (s == "lexicon") {
      in.lexicon = capgap::LexiconReport::from_json(json);
    } else if (s == "judgments") {
      in.judgments = capgap::JudgmentSummary::from_json(json);
    } else {
      throw capgap::ArgumentError("unknown report section '" + s + "'");
    }
  });
}

capgap_status capgap_report_add_baseline(capgap_report_builder* builder, const char* name,
                                         double value) {
  return guard([&] {
    need(builder, "builder");
    need(name, "name");
    if (!std::isfinite(value)) throw capgap::ArgumentError("baseline value must be finite");
    builder->value.baselines[name] = value;
  });
}

capgap_status capgap_report_assemble(const capgap_report_builder* builder, capgap_report** out) {
  return guard([&] {
    need(builder, "builder");
    need(out, "out");
    *out = new capgap_report{capgap::GapReport::assemble(builder->value)};
  });
}

capgap_status capgap_report_load(const char* path, capgap_report** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new capgap_report{capgap::GapReport::from_json(capgap::text::read_file(path))};
  });
}

void capgap_report_free(capgap_report* report) { delete report; }
double capgap_report_gap(const capgap_report* report) {
  return report ? report->value.gap() : std::nan("");
}
double capgap_report_text_accuracy(const capgap_report* report) {
  return report ? report->value.text_accuracy() : std::nan("");
}
double capgap_report_image_accuracy(const capgap_report* report) {
  return report ? report->value.image_accuracy() : std::nan("");
}
const char* capgap_report_digest(const capgap_report* report) {
  return report ? report->value.config_digest().c_str() : "";
}

capgap_status capgap_report_to_json(const capgap_report* report, char** out) {
  return guard([&] {
    need(report, "report");
    need(out, "out");
    *out = dup(report->value.to_json());
  });
}

capgap_status capgap_report_export(const capgap_report* report, const char* dir,
                                   const char* formats, char** out_files) {
  return guard([&] {
    need(report, "report");
    need(dir, "dir");
    need(formats, "formats");
    std::vector<capgap::ExportFormat> list;
    std::string_view rest(formats);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = capgap::text::trim(rest.substr(0, comma));
      const auto f = capgap::parse_export_format(item);
      if (!f) throw capgap::ArgumentError("unknown export format '" + item + "'");
      list.push_back(*f);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (list.empty()) throw capgap::ArgumentError("no export format given");
    const auto written = report->value.export_to(dir, list);
    if (out_files) {
      std::string names;
      for (const auto& p : written) names += p.string() + "\n";
      *out_files = dup(names);
    }
  });
}

void capgap_report_check_counts(const capgap_report* report, size_t* total, size_t* passed) {
  size_t t = 0, p = 0;
  if (report) {
    for (const auto& c : report->value.reference_checks()) {
      ++t;
      if (c.pass) ++p;
    }
  }
  if (total) *total = t;
  if (passed) *passed = p;
}

}  // extern "C"
