// capgap command-line tool. Every subcommand goes through the C interface in
// capgap/capgap.h and leaves a run manifest beside its outputs.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "capgap/capgap.h"
#include "capgap/manifest.hpp"
#include "capgap/settings.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Failure {
  int code;
  std::string message;
};

int exit_code(capgap_status s) {
  switch (s) {
    case CAPGAP_OK:
      return 0;
    case CAPGAP_ERR_ARGUMENT:
      return 1;
    case CAPGAP_ERR_DATA:
    case CAPGAP_ERR_IO:
      return 2;
    case CAPGAP_ERR_NUMERIC:
      return 3;
    case CAPGAP_ERR_INTERNAL:
      break;
  }
  return 4;
}

void check(capgap_status s) {
  if (s != CAPGAP_OK) throw Failure{exit_code(s), capgap_last_error()};
}

template <class T>
using Owned = std::unique_ptr<T, void (*)(T*)>;

std::string take(char* s) {
  std::string out = s ? s : "";
  capgap_string_free(s);
  return out;
}

void usage(const std::string& message) { throw cli::UsageError{message}; }

struct Run {
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 1;
  cli::Settings settings;
  cli::RunManifest manifest;

  const char* in(const std::string& path) {
    manifest.inputs.emplace_back(path);
    return path.c_str();
  }
  const char* out(const std::string& path) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    manifest.outputs.push_back(p);
    return path.c_str();
  }
  void write(const std::string& path, const std::string& contents) {
    out(path);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Failure{2, "cannot write " + path};
    f << contents;
  }
};

// ------------------------------------------------------------------ loaders

Owned<capgap_corpus> load_corpus(Run& run, const std::string& path) {
  capgap_corpus* c = nullptr;
  check(capgap_corpus_load(run.in(path), nullptr, 0, run.threads, &c));
  return {c, capgap_corpus_free};
}

Owned<capgap_corpus> maybe_corpus(Run& run, const std::string& path) {
  if (path.empty()) return {nullptr, capgap_corpus_free};
  return load_corpus(run, path);
}

Owned<capgap_split> load_split(Run& run, const std::string& path) {
  capgap_split* s = nullptr;
  check(capgap_split_load(run.in(path), &s));
  return {s, capgap_split_free};
}

Owned<capgap_split> maybe_split(Run& run, const std::string& path) {
  if (path.empty()) return {nullptr, capgap_split_free};
  return load_split(run, path);
}

capgap_normalize parse_normalize(const std::string& s) {
  if (s == "auto") return CAPGAP_NORMALIZE_AUTO;
  if (s == "on") return CAPGAP_NORMALIZE_ON;
  if (s == "off") return CAPGAP_NORMALIZE_OFF;
  usage("--normalize expects auto, on or off");
  return CAPGAP_NORMALIZE_AUTO;
}

Owned<capgap_embeddings> load_embeddings(Run& run, const std::string& path,
                                         const std::string& normalize) {
  capgap_embeddings* e = nullptr;
  check(capgap_embeddings_load(run.in(path), parse_normalize(normalize), run.threads, &e));
  return {e, capgap_embeddings_free};
}

Owned<capgap_metrics> load_metrics(Run& run, const std::string& path) {
  capgap_metrics* m = nullptr;
  check(capgap_metrics_load(run.in(path), &m));
  return {m, capgap_metrics_free};
}

capgap_train_config train_config(Run& run, const std::string& preset, bool sparse) {
  capgap_train_config c;
  check(capgap_train_config_init(&c, preset.c_str(), sparse ? 1 : 0));
  run.settings.apply(c);
  c.seed = run.seed;
  return c;
}

void print_metrics(const capgap_metrics* m) {
  std::printf("accuracy %.4f  macro %.4f  n_test %lld\n", capgap_metrics_accuracy(m),
              capgap_metrics_macro_accuracy(m), static_cast<long long>(capgap_metrics_n_test(m)));
}

void save_metrics(Run& run, const capgap_metrics* m, const std::string& path) {
  check(capgap_metrics_save(m, run.out(path)));
  print_metrics(m);
}

std::pair<std::string, std::string> name_and_path(const std::string& topts, bool name_required) {
  const auto eq = topts.find('=');
  if (eq == std::string::npos) {
    if (name_required) usage("expected name=path, got '" + topts + "'");
    return {"", topts};
  }
  return {topts.substr(0, eq), topts.substr(eq + 1)};
}

// --------------------------------------------------------------- subcommands

struct Commands {
  Run& run;
  CLI::App& app;
  std::map<std::string, std::function<void()>> handlers;
  std::set<std::string> output_options = {"--out", "--csv", "--tables", "--image-out"};

  void add(CLI::App* sub, std::function<void()> fn) { handlers[sub->get_name()] = std::move(fn); }

  void ingest() {
    auto* sub = app.add_subcommand("ingest", "Validate a caption JSONL file and write a corpus");
    auto input = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto labels = std::make_shared<std::vector<std::string>>();
    sub->add_option("--input", *input, "Caption JSONL")->required();
    sub->add_option("--out", *out, "Corpus file to write")->required();
    sub->add_option("--labels", *labels, "Label order (default: sorted observed labels)")
        ->delimiter(',');
    add(sub, [this, input, out, labels] {
      std::vector<const char*> ptrs;
      for (const auto& l : *labels) ptrs.push_back(l.c_str());
      capgap_corpus* c = nullptr;
      check(capgap_corpus_load(run.in(*input), labels->empty() ? nullptr : ptrs.data(),
                               ptrs.size(), run.threads, &c));
      Owned<capgap_corpus> corpus(c, capgap_corpus_free);
      check(capgap_corpus_save(corpus.get(), run.out(*out)));
      std::printf("%zu records, %zu labels, %zu images\n", capgap_corpus_size(c),
                  capgap_corpus_label_count(c), capgap_corpus_image_count(c));
    });
  }

  void split() {
    auto* sub = app.add_subcommand("split", "Grouped train/test split by image id");
    auto corpus = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto frac = std::make_shared<double>(0.8);
    sub->add_option("--corpus", *corpus, "Corpus file")->required();
    sub->add_option("--train-frac", *frac, "Fraction of images on the train side")->capture_default_str();
    sub->add_option("--out", *out, "Split file to write")->required();
    add(sub, [this, corpus, out, frac] {
      auto c = load_corpus(run, *corpus);
      capgap_split* s = nullptr;
      check(capgap_split_make(c.get(), *frac, run.seed, &s));
      Owned<capgap_split> split(s, capgap_split_free);
      check(capgap_split_save(s, run.out(*out)));
      std::printf("train images %zu, test images %zu\n", capgap_split_train_images(s),
                  capgap_split_test_images(s));
    });
  }

  void transform() {
    auto* sub = app.add_subcommand("transform", "Apply a caption transformation");
    auto kind = std::make_shared<std::string>();
    auto input = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto global = std::make_shared<bool>(false);
    auto keep_dashes = std::make_shared<bool>(false);
    sub->add_option("--kind", *kind,
                    "strip_markdown | strip_special_chars | shuffle_words | shuffle_letters")
        ->required();
    sub->add_option("--input", *input, "Corpus file")->required();
    sub->add_option("--out", *out, "Transformed corpus to write")->required();
    sub->add_flag("--global", *global, "shuffle_letters across the whole caption");
    sub->add_flag("--keep-dashes", *keep_dashes, "strip_special_chars: drop dashes instead of spacing");
    add(sub, [this, kind, input, out, global, keep_dashes] {
      capgap_transform_options topts;
      capgap_transform_options_init(&topts);
      topts.kind = kind->c_str();
      const bool shuffle = kind->rfind("shuffle", 0) == 0;
      if (shuffle && !run.seed_given) usage("--kind " + *kind + " needs --seed");
      topts.has_seed = shuffle ? 1 : 0;
      topts.seed = run.seed;
      topts.global_letters = *global ? 1 : 0;
      topts.dash_to_space = *keep_dashes ? 0 : 1;
      auto c = load_corpus(run, *input);
      capgap_corpus* t = nullptr;
      check(capgap_transform_corpus(c.get(), &topts, run.threads, &t));
      Owned<capgap_corpus> transformed(t, capgap_corpus_free);
      check(capgap_corpus_save(t, run.out(*out)));
      std::printf("%zu records transformed\n", capgap_corpus_size(t));
    });
  }

  void tfidf_top() {
    auto* sub = app.add_subcommand("tfidf-top", "Top TF-IDF phrases per label (CSV)");
    auto corpus = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto ngrams = std::make_shared<std::vector<int>>();
    auto k = std::make_shared<std::size_t>(10);
    auto exclude = std::make_shared<std::string>();
    auto scoring = std::make_shared<std::string>("mean");
    sub->add_option("--corpus", *corpus, "Corpus file")->required();
    sub->add_option("--ngrams", *ngrams, "n-gram range min,max (default 2,3)")
        ->delimiter(',')
        ->expected(2);
    sub->add_option("--k", *k, "Phrases per label")->capture_default_str();
    sub->add_option("--exclude", *exclude, "Term list of phrases to skip");
    sub->add_option("--scoring", *scoring, "mean | ratio")->capture_default_str();
    sub->add_option("--out", *out, "CSV file to write")->required();
    add(sub, [this, corpus, out, ngrams, k, exclude, scoring] {
      capgap_tfidf_config cfg;
      check(capgap_tfidf_config_init(&cfg, "phrases"));
      run.settings.apply(cfg);
      if (!ngrams->empty()) {
        cfg.ngram_min = (*ngrams)[0];
        cfg.ngram_max = (*ngrams)[1];
      }
      if (*scoring != "mean" && *scoring != "ratio") usage("--scoring expects mean or ratio");
      auto c = load_corpus(run, *corpus);
      char* csv = nullptr;
      check(capgap_top_phrases_csv(c.get(), &cfg, *k, exclude->empty() ? nullptr : run.in(*exclude),
                                   *scoring == "ratio" ? CAPGAP_SCORING_CLASS_VS_REST
                                                       : CAPGAP_SCORING_CLASS_MEAN,
                                   run.threads, &csv));
      run.write(*out, take(csv));
    });
  }

  void wordfreq() {
    auto* sub = app.add_subcommand("wordfreq", "Word counts for one label");
    auto corpus = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto label = std::make_shared<std::string>();
    auto format = std::make_shared<std::string>("csv");
    auto stopwords = std::make_shared<std::string>();
    auto keep_stopwords = std::make_shared<bool>(false);
    sub->add_option("--corpus", *corpus, "Corpus file")->required();
    sub->add_option("--label", *label, "Source label")->required();
    sub->add_option("--format", *format, "csv | json")->capture_default_str();
    sub->add_option("--stopwords", *stopwords, "Stopword list (default: built-in English list)");
    sub->add_flag("--no-stopwords", *keep_stopwords, "Count stopwords too");
    sub->add_option("--out", *out, "File to write")->required();
    add(sub, [this, corpus, out, label, format, stopwords, keep_stopwords] {
      auto c = load_corpus(run, *corpus);
      char* s = nullptr;
      check(capgap_word_frequencies(c.get(), label->c_str(), *keep_stopwords ? 0 : 1,
                                    stopwords->empty() ? nullptr : run.in(*stopwords),
                                    format->c_str(), &s));
      run.write(*out, take(s));
    });
  }

  void train() {
    auto* sub = app.add_subcommand("train", "Train a softmax-regression classifier");
    auto features = std::make_shared<std::string>("tfidf");
    auto preset = std::make_shared<std::string>("desk");
    auto corpus = std::make_shared<std::string>();
    auto embeddings = std::make_shared<std::string>();
    auto split = std::make_shared<std::string>();
    auto normalize = std::make_shared<std::string>("auto");
    auto out = std::make_shared<std::string>();
    sub->add_option("--features", *features, "tfidf | embedding")->capture_default_str();
    sub->add_option("--preset", *preset, "desk | original")->capture_default_str();
    sub->add_option("--corpus", *corpus, "Corpus (text features, or id resolution)");
    sub->add_option("--embeddings", *embeddings, "Embedding JSONL (embedding features)");
    sub->add_option("--split", *split, "Split file; trains on its train side");
    sub->add_option("--normalize", *normalize, "auto | on | off")->capture_default_str();
    sub->add_option("--out", *out, "Model file to write")->required();
    add(sub, [this, features, preset, corpus, embeddings, split, normalize, out] {
      capgap_classifier* model = nullptr;
      if (*features == "tfidf") {
        if (corpus->empty()) usage("--features tfidf needs --corpus");
        capgap_tfidf_config tf;
        check(capgap_tfidf_config_init(&tf, "classifier"));
        run.settings.apply(tf);
        const auto cfg = train_config(run, *preset, true);
        auto c = load_corpus(run, *corpus);
        auto s = maybe_split(run, *split);
        check(capgap_train_text(c.get(), s.get(), &tf, &cfg, run.threads, &model));
      } else if (*features == "embedding") {
        if (embeddings->empty()) usage("--features embedding needs --embeddings");
        const auto cfg = train_config(run, *preset, false);
        auto e = load_embeddings(run, *embeddings, *normalize);
        auto c = maybe_corpus(run, *corpus);
        auto s = maybe_split(run, *split);
        check(capgap_train_embeddings(e.get(), s.get(), c.get(), &cfg, run.threads, &model));
      } else {
        usage("--features expects tfidf or embedding");
      }
      Owned<capgap_classifier> owned(model, capgap_classifier_free);
      check(capgap_classifier_save(model, run.out(*out)));
    });
  }

  void eval() {
    auto* sub = app.add_subcommand("eval", "Evaluate a classifier and write metrics JSON");
    auto model = std::make_shared<std::string>();
    auto test = std::make_shared<std::string>();
    auto split = std::make_shared<std::string>();
    auto corpus = std::make_shared<std::string>();
    auto normalize = std::make_shared<std::string>("auto");
    auto out = std::make_shared<std::string>();
    sub->add_option("--model", *model, "Model file")->required();
    sub->add_option("--test", *test, "Corpus (text model) or embedding JSONL")->required();
    sub->add_option("--split", *split, "Split file; evaluates its test side");
    sub->add_option("--corpus", *corpus, "Corpus for embedding id resolution");
    sub->add_option("--normalize", *normalize, "auto | on | off")->capture_default_str();
    sub->add_option("--out", *out, "Metrics JSON to write")->required();
    add(sub, [this, model, test, split, corpus, normalize, out] {
      capgap_classifier* cl = nullptr;
      check(capgap_classifier_load(run.in(*model), &cl));
      Owned<capgap_classifier> owned(cl, capgap_classifier_free);
      capgap_metrics* m = nullptr;
      if (capgap_classifier_is_text(cl)) {
        auto c = load_corpus(run, *test);
        auto s = maybe_split(run, *split);
        check(capgap_evaluate_text(cl, c.get(), s.get(), run.threads, &m));
      } else {
        auto e = load_embeddings(run, *test, *normalize);
        auto c = maybe_corpus(run, *corpus);
        auto s = maybe_split(run, *split);
        check(capgap_evaluate_embeddings(cl, e.get(), s.get(), c.get(), run.threads, &m));
      }
      Owned<capgap_metrics> metrics(m, capgap_metrics_free);
      save_metrics(run, m, *out);
    });
  }

  void probe() {
    auto* sub = app.add_subcommand("probe", "Linear probe on precomputed embeddings");
    auto embeddings = std::make_shared<std::string>();
    auto split = std::make_shared<std::string>();
    auto corpus = std::make_shared<std::string>();
    auto preset = std::make_shared<std::string>("desk");
    auto generator = std::make_shared<std::string>();
    auto normalize = std::make_shared<std::string>("auto");
    auto out = std::make_shared<std::string>();
    sub->add_option("--embeddings", *embeddings, "Embedding JSONL")->required();
    sub->add_option("--split", *split, "Split file")->required();
    sub->add_option("--corpus", *corpus, "Corpus for id resolution");
    sub->add_option("--preset", *preset, "desk | original")->capture_default_str();
    sub->add_option("--generator", *generator, "Only records with this generator_tag");
    sub->add_option("--normalize", *normalize, "auto | on | off")->capture_default_str();
    sub->add_option("--out", *out, "Metrics JSON to write")->required();
    add(sub, [this, embeddings, split, corpus, preset, generator, normalize, out] {
      const auto cfg = train_config(run, *preset, false);
      auto e = load_embeddings(run, *embeddings, *normalize);
      auto s = load_split(run, *split);
      auto c = maybe_corpus(run, *corpus);
      capgap_metrics* m = nullptr;
      check(capgap_probe(e.get(), s.get(), c.get(), &cfg,
                         generator->empty() ? nullptr : generator->c_str(), run.threads, &m));
      Owned<capgap_metrics> metrics(m, capgap_metrics_free);
      save_metrics(run, m, *out);
    });
  }

  void keyword() {
    auto* sub = app.add_subcommand("keyword", "Raw vs. keyword prompt comparison");
    auto raw_text = std::make_shared<std::string>();
    auto kw_text = std::make_shared<std::string>();
    auto raw_image = std::make_shared<std::string>();
    auto kw_image = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    sub->add_option("--raw-text", *raw_text, "Metrics JSON")->required();
    sub->add_option("--keyword-text", *kw_text, "Metrics JSON")->required();
    sub->add_option("--raw-image", *raw_image, "Metrics JSON");
    sub->add_option("--keyword-image", *kw_image, "Metrics JSON");
    sub->add_option("--out", *out, "Comparison JSON to write")->required();
    add(sub, [this, raw_text, kw_text, raw_image, kw_image, out] {
      auto rt = load_metrics(run, *raw_text);
      auto kt = load_metrics(run, *kw_text);
      Owned<capgap_metrics> ri(nullptr, capgap_metrics_free), ki(nullptr, capgap_metrics_free);
      if (!raw_image->empty()) ri = load_metrics(run, *raw_image);
      if (!kw_image->empty()) ki = load_metrics(run, *kw_image);
      char* json = nullptr;
      check(capgap_keyword_comparison(rt.get(), kt.get(), ri.get(), ki.get(), &json));
      run.write(*out, take(json) + "\n");
    });
  }

  void match() {
    auto* sub = app.add_subcommand("match", "Image-to-caption matching attribution");
    auto text = std::make_shared<std::string>();
    auto image = std::make_shared<std::string>();
    auto corpus = std::make_shared<std::string>();
    auto split = std::make_shared<std::string>();
    auto frac = std::make_shared<double>(0.8);
    auto dim = std::make_shared<std::size_t>(0);
    auto tau = std::make_shared<double>(0.0);
    auto init = std::make_shared<std::string>();
    auto normalize = std::make_shared<std::string>("auto");
    auto out = std::make_shared<std::string>();
    sub->add_option("--text-emb", *text, "Caption embeddings")->required();
    sub->add_option("--image-emb", *image, "Image embeddings (<caption_id>#img)")->required();
    sub->add_option("--corpus", *corpus, "Corpus file")->required();
    sub->add_option("--split", *split, "Split file (default: grouped split with --seed)");
    sub->add_option("--train-frac", *frac, "Train fraction when no split is given")->capture_default_str();
    sub->add_option("--dim", *dim, "Shared dimension (default 128)");
    sub->add_option("--tau", *tau, "Temperature (default 0.07)");
    sub->add_option("--init", *init, "random | identity");
    sub->add_option("--normalize", *normalize, "auto | on | off")->capture_default_str();
    sub->add_option("--out", *out, "Match report JSON to write")->required();
    add(sub, [this, sub, text, image, corpus, split, frac, dim, tau, init, normalize, out] {
      capgap_match_config cfg;
      capgap_match_config_init(&cfg);
      run.settings.apply(cfg);
      cfg.train.seed = run.seed;
      if (sub->count("--dim")) cfg.dim = *dim;
      if (sub->count("--tau")) cfg.tau = *tau;
      if (!init->empty()) {
        if (*init != "random" && *init != "identity") usage("--init expects random or identity");
        cfg.identity_init = *init == "identity" ? 1 : 0;
      }
      auto c = load_corpus(run, *corpus);
      auto t = load_embeddings(run, *text, *normalize);
      auto i = load_embeddings(run, *image, *normalize);
      Owned<capgap_split> s(nullptr, capgap_split_free);
      if (split->empty()) {
        capgap_split* made = nullptr;
        check(capgap_split_make(c.get(), *frac, run.seed, &made));
        s.reset(made);
      } else {
        s = load_split(run, *split);
      }
      char* json = nullptr;
      check(capgap_match_run(c.get(), t.get(), i.get(), s.get(), &cfg, run.threads, &json));
      const auto report = take(json);
      run.write(*out, report + "\n");
      const auto parsed = nlohmann::json::parse(report);
      std::printf("match accuracy %.4f over %lld test instances\n",
                  parsed.at("metrics").at("overall_accuracy").get<double>(),
                  static_cast<long long>(parsed.at("metrics").at("n_test").get<std::int64_t>()));
    });
  }

  void lexicon() {
    auto* sub = app.add_subcommand("lexicon", "Color, texture and composition vocabulary statistics");
    auto corpus = std::make_shared<std::string>();
    auto dicts = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto tables = std::make_shared<std::string>();
    auto colors = std::make_shared<bool>(false);
    auto textures = std::make_shared<bool>(false);
    auto composition = std::make_shared<bool>(false);
    sub->add_option("--corpus", *corpus, "Corpus file")->required();
    sub->add_flag("--colors", *colors, "Color terms");
    sub->add_flag("--textures", *textures, "Texture terms");
    sub->add_flag("--composition", *composition, "Composition criteria");
    sub->add_option("--dictionaries", *dicts, "Directory with replacement dictionary files");
    sub->add_option("--out", *out, "Statistics JSON to write")->required();
    sub->add_option("--tables", *tables, "Directory for table-shaped CSVs");
    add(sub, [this, corpus, dicts, out, tables, colors, textures, composition] {
      int sections = (*colors ? CAPGAP_LEXICON_COLORS : 0) |
                     (*textures ? CAPGAP_LEXICON_TEXTURES : 0) |
                     (*composition ? CAPGAP_LEXICON_COMPOSITION : 0);
      if (sections == 0) {
        sections = CAPGAP_LEXICON_COLORS | CAPGAP_LEXICON_TEXTURES | CAPGAP_LEXICON_COMPOSITION;
      }
      auto c = load_corpus(run, *corpus);
      if (!dicts->empty()) run.in(*dicts);
      char* json = nullptr;
      check(capgap_lexicon_stats(c.get(), sections, dicts->empty() ? nullptr : dicts->c_str(),
                                 run.threads, &json));
      const auto stats = take(json);
      run.write(*out, stats + "\n");
      if (!tables->empty()) {
        char* t4 = nullptr;
        char* t5 = nullptr;
        check(capgap_lexicon_tables(stats.c_str(), &t4, &t5));
        const auto a = take(t4);
        const auto b = take(t5);
        if (!a.empty()) run.write((fs::path(*tables) / "table4_lexicon.csv").string(), a);
        if (!b.empty()) run.write((fs::path(*tables) / "table5_composition.csv").string(), b);
      }
    });
  }

  void judgments() {
    auto* sub = app.add_subcommand("judgments", "Validate and summarize judgment JSONL");
    auto ingest = std::make_shared<std::string>();
    auto corpus = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto csv = std::make_shared<std::string>();
    sub->add_option("--ingest", *ingest, "Judgment JSONL")->required();
    sub->add_option("--corpus", *corpus, "Corpus the judgments refer to")->required();
    sub->add_option("--out", *out, "Summary JSON to write")->required();
    sub->add_option("--csv", *csv, "Rank distribution CSV to write");
    add(sub, [this, ingest, corpus, out, csv] {
      auto c = load_corpus(run, *corpus);
      char* json = nullptr;
      char* ranks = nullptr;
      check(capgap_judgments_summarize(run.in(*ingest), c.get(), &json, &ranks));
      const auto summary = take(json);
      const auto table = take(ranks);
      run.write(*out, summary + "\n");
      if (!csv->empty()) run.write(*csv, table);
    });
  }

  void report() {
    auto* sub = app.add_subcommand("report", "Assemble the idiosyncratic-gap report");
    auto text = std::make_shared<std::string>();
    auto images = std::make_shared<std::vector<std::string>>();
    auto four_way = std::make_shared<std::string>();
    auto keyword = std::make_shared<std::string>();
    auto transforms = std::make_shared<std::vector<std::string>>();
    auto probes = std::make_shared<std::vector<std::string>>();
    auto match = std::make_shared<std::string>();
    auto lex = std::make_shared<std::string>();
    auto judg = std::make_shared<std::string>();
    auto baselines = std::make_shared<std::vector<std::string>>();
    auto out = std::make_shared<std::string>();
    auto formats = std::make_shared<std::string>("json,csv,markdown");
    sub->add_option("--text", *text, "Text-side metrics JSON")->required();
    sub->add_option("--image", *images, "Image-side metrics JSON, optionally name=path")->required();
    sub->add_option("--four-way", *four_way, "Four-way metrics JSON");
    sub->add_option("--keyword", *keyword, "Keyword comparison JSON");
    sub->add_option("--transform", *transforms, "name=metrics.json per transformation");
    sub->add_option("--probe", *probes, "name=metrics.json per encoder probe");
    sub->add_option("--match", *match, "Match report JSON");
    sub->add_option("--lexicon", *lex, "Lexicon statistics JSON");
    sub->add_option("--judgments", *judg, "Judgment summary JSON");
    sub->add_option("--baseline", *baselines, "name=value manual entry (e.g. human accuracy)");
    sub->add_option("--out", *out, "Output directory")->required();
    sub->add_option("--format", *formats, "Comma-separated json,csv,markdown")->capture_default_str();
    add(sub, [=, this] {
      capgap_report_builder* b = nullptr;
      check(capgap_report_builder_new(&b));
      Owned<capgap_report_builder> builder(b, capgap_report_builder_free);
      auto add_metrics = [&](const char* section, const std::string& name, const std::string& path) {
        auto m = load_metrics(run, path);
        check(capgap_report_add_metrics(b, section, name.empty() ? nullptr : name.c_str(), m.get()));
      };
      auto add_json = [&](const char* section, const std::string& path) {
        std::ifstream f(run.in(path), std::ios::binary);
        if (!f) throw Failure{2, "cannot open " + path};
        const std::string json((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        check(capgap_report_add_json(b, section, json.c_str()));
      };
      add_metrics("text", "", *text);
      for (const auto& topts : *images) {
        const auto [name, path] = name_and_path(topts, false);
        add_metrics("image", name, path);
      }
      if (!four_way->empty()) add_metrics("four_way", "", *four_way);
      for (const auto& topts : *transforms) {
        const auto [name, path] = name_and_path(topts, true);
        add_metrics("transform", name, path);
      }
      for (const auto& topts : *probes) {
        const auto [name, path] = name_and_path(topts, true);
        add_metrics("probe", name, path);
      }
      if (!keyword->empty()) add_json("keyword", *keyword);
      if (!match->empty()) add_json("match", *match);
      if (!lex->empty()) add_json("lexicon", *lex);
      if (!judg->empty()) add_json("judgments", *judg);
      for (const auto& topts : *baselines) {
        const auto [name, value] = name_and_path(topts, true);
        double v = 0.0;
        try {
          v = std::stod(value);
        } catch (const std::exception&) {
          usage("baseline '" + name + "' is not a number");
        }
        check(capgap_report_add_baseline(b, name.c_str(), v));
      }
      capgap_report* r = nullptr;
      check(capgap_report_assemble(b, &r));
      Owned<capgap_report> report(r, capgap_report_free);
      fs::create_directories(*out);
      char* files = nullptr;
      check(capgap_report_export(r, out->c_str(), formats->c_str(), &files));
      std::string list = take(files);
      for (std::size_t start = 0; start < list.size();) {
        const auto nl = list.find('\n', start);
        run.manifest.outputs.emplace_back(list.substr(start, nl - start));
        start = nl + 1;
      }
      std::size_t total = 0, passed = 0;
      capgap_report_check_counts(r, &total, &passed);
      std::printf("text %.4f  image %.4f  gap %.4f\n", capgap_report_text_accuracy(r),
                  capgap_report_image_accuracy(r), capgap_report_gap(r));
      if (total > 0) std::printf("reference checks: %zu of %zu within tolerance\n", passed, total);
    });
  }

  void synth() {
    auto* sub = app.add_subcommand("synth", "Write the synthetic fingerprint corpus");
    auto out = std::make_shared<std::string>();
    auto images = std::make_shared<std::size_t>(0);
    auto classes = std::make_shared<std::size_t>(0);
    sub->add_option("--images", *images, "Number of images (default 1200)");
    sub->add_option("--classes", *classes, "Number of captioning sources (default 3)");
    sub->add_option("--out", *out, "Corpus file to write")->required();
    add(sub, [this, sub, out, images, classes] {
      capgap_synth_config cfg;
      capgap_synth_config_init(&cfg);
      run.settings.apply(cfg);
      cfg.seed = run.seed;
      if (sub->count("--images")) cfg.images = *images;
      if (sub->count("--classes")) cfg.classes = *classes;
      capgap_corpus* c = nullptr;
      check(capgap_synth_corpus(&cfg, &c));
      Owned<capgap_corpus> corpus(c, capgap_corpus_free);
      check(capgap_corpus_save(c, run.out(*out)));
      std::printf("%zu records, %zu labels, %zu images\n", capgap_corpus_size(c),
                  capgap_corpus_label_count(c), capgap_corpus_image_count(c));
    });
  }

  void synth_embeddings() {
    auto* sub = app.add_subcommand("synth-embeddings", "Gaussian-cluster embeddings for a corpus");
    auto corpus = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto image_out = std::make_shared<std::string>();
    auto dim = std::make_shared<std::size_t>(16);
    auto separation = std::make_shared<double>(3.0);
    auto noise = std::make_shared<double>(0.5);
    auto encoder = std::make_shared<std::string>("synthetic-encoder");
    auto generator = std::make_shared<std::string>("synthetic-generator");
    sub->add_option("--corpus", *corpus, "Corpus file")->required();
    sub->add_option("--dim", *dim, "Embedding dimension")->capture_default_str();
    sub->add_option("--separation", *separation, "Class-mean offset along its own axis, in noise sigmas")->capture_default_str();
    sub->add_option("--out", *out, "Caption embedding JSONL to write")->required();
    sub->add_option("--image-out", *image_out, "Also write <caption_id>#img embeddings");
    sub->add_option("--noise", *noise, "Image embedding noise sigma")->capture_default_str();
    sub->add_option("--encoder-tag", *encoder, "encoder_tag")->capture_default_str();
    sub->add_option("--generator-tag", *generator, "generator_tag for images")->capture_default_str();
    add(sub, [=, this] {
      auto c = load_corpus(run, *corpus);
      capgap_embeddings* t = nullptr;
      check(capgap_synth_text_embeddings(c.get(), *dim, *separation, run.seed, encoder->c_str(), &t));
      Owned<capgap_embeddings> text(t, capgap_embeddings_free);
      check(capgap_embeddings_save(t, run.out(*out)));
      if (!image_out->empty()) {
        capgap_embeddings* i = nullptr;
        check(capgap_synth_image_embeddings(t, *noise, run.seed + 1, encoder->c_str(),
                                            generator->c_str(), &i));
        Owned<capgap_embeddings> img(i, capgap_embeddings_free);
        check(capgap_embeddings_save(i, run.out(*image_out)));
      }
    });
  }

  void four_way() {
    auto* sub = app.add_subcommand("four-way", "Add original items as an extra class");
    auto input = std::make_shared<std::string>();
    auto originals = std::make_shared<std::string>();
    auto label = std::make_shared<std::string>("original");
    auto kind = std::make_shared<std::string>("corpus");
    auto normalize = std::make_shared<std::string>("auto");
    auto out = std::make_shared<std::string>();
    sub->add_option("--input", *input, "Corpus or embedding JSONL")->required();
    sub->add_option("--originals", *originals, "Original items, same file type")->required();
    sub->add_option("--label", *label, "Label for the original items")->capture_default_str();
    sub->add_option("--kind", *kind, "corpus | embeddings")->capture_default_str();
    sub->add_option("--normalize", *normalize, "auto | on | off (embeddings)")->capture_default_str();
    sub->add_option("--out", *out, "File to write")->required();
    add(sub, [=, this] {
      if (*kind == "corpus") {
        auto c = load_corpus(run, *input);
        auto o = load_corpus(run, *originals);
        capgap_corpus* r = nullptr;
        check(capgap_corpus_four_way(c.get(), o.get(), label->c_str(), &r));
        Owned<capgap_corpus> result(r, capgap_corpus_free);
        check(capgap_corpus_save(r, run.out(*out)));
      } else if (*kind == "embeddings") {
        auto e = load_embeddings(run, *input, *normalize);
        auto o = load_embeddings(run, *originals, *normalize);
        capgap_embeddings* r = nullptr;
        check(capgap_embeddings_four_way(e.get(), o.get(), label->c_str(), &r));
        Owned<capgap_embeddings> result(r, capgap_embeddings_free);
        check(capgap_embeddings_save(r, run.out(*out)));
      } else {
        usage("--kind expects corpus or embeddings");
      }
    });
  }
};

// Output paths must not name an input of the same run.
void refuse_overwriting_inputs(const CLI::App* sub, const std::set<std::string>& output_options) {
  std::set<fs::path> inputs, outputs;
  for (const auto* opt : sub->get_options()) {
    for (const auto& value : opt->results()) {
      const auto& names = opt->get_lnames();
      const bool is_output =
          !names.empty() && output_options.count("--" + names.front()) > 0;
      std::error_code ec;
      const auto p = fs::weakly_canonical(value, ec);
      if (ec) continue;
      if (is_output) {
        outputs.insert(p);
      } else if (fs::exists(p)) {
        inputs.insert(p);
      }
    }
  }
  for (const auto& o : outputs) {
    if (inputs.count(o)) usage("output " + o.string() + " would overwrite an input");
  }
}

std::string config_digest(const CLI::App* sub, const Run& run) {
  nlohmann::ordered_json o;
  o["subcommand"] = sub->get_name();
  o["seed"] = run.seed;
  nlohmann::ordered_json opts = nlohmann::ordered_json::object();
  for (const auto* opt : sub->get_options()) {
    if (opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
    if (opt->count() == 0) continue;
    opts[opt->get_lnames().front()] = opt->results();
  }
  o["options"] = std::move(opts);
  o["settings"] = run.settings.values();
  return cli::sha256_hex(o.dump());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capgap: caption idiosyncrasy forensics"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", capgap_version());

  Run run;
  std::string config_path;
  auto* seed_opt = app.add_option("--seed", run.seed, "Seed for splits, shuffles and training");
  app.add_option("--threads", run.threads, "Worker threads")->capture_default_str()->check(CLI::Range(1, 1024));
  app.add_option("--config", config_path, "key=value settings file");

  Commands commands{run, app, {}};
  commands.ingest();
  commands.split();
  commands.transform();
  commands.tfidf_top();
  commands.wordfreq();
  commands.train();
  commands.eval();
  commands.probe();
  commands.keyword();
  commands.match();
  commands.lexicon();
  commands.judgments();
  commands.report();
  commands.synth();
  commands.synth_embeddings();
  commands.four_way();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    run.seed_given = seed_opt->count() > 0;
    if (!config_path.empty()) {
      run.settings = cli::Settings::load(config_path);
      run.manifest.inputs.emplace_back(config_path);
    }
    refuse_overwriting_inputs(sub, commands.output_options);
    run.manifest.subcommand = sub->get_name();
    run.manifest.argv.assign(argv, argv + argc);
    run.manifest.config_digest = config_digest(sub, run);
    commands.handlers.at(sub->get_name())();
    run.manifest.write(capgap_version());
  } catch (const cli::UsageError& e) {
    std::cerr << "error: " << e.message << "\n\n" << sub->help();
    return 1;
  } catch (const Failure& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
