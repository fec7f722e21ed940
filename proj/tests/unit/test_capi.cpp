#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>

#include "capgap/capgap.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  capgap_string_free(s);
  return out;
}

const char* kCorpus =
    R"({"caption_id":"a1","image_id":"i1","prompt_tier":"coarse","source_label":"A","text":"red sky"})" "\n"
    R"({"caption_id":"b1","image_id":"i1","prompt_tier":"coarse","source_label":"B","text":"blue sea"})" "\n"
    R"({"caption_id":"a2","image_id":"i2","prompt_tier":"coarse","source_label":"A","text":"red barn"})" "\n"
    R"({"caption_id":"b2","image_id":"i2","prompt_tier":"coarse","source_label":"B","text":"blue boat"})" "\n";

}  // namespace

TEST(CApi, VersionAndNullArguments) {
  EXPECT_STREQ(capgap_version(), "0.1.0");
  capgap_corpus* c = nullptr;
  EXPECT_EQ(capgap_corpus_parse(nullptr, 0, nullptr, 0, 1, &c), CAPGAP_ERR_ARGUMENT);
  EXPECT_EQ(c, nullptr);
  EXPECT_GT(std::strlen(capgap_last_error()), 0u);
}

TEST(CApi, CorpusParseErrorsAreDataErrors) {
  capgap_corpus* c = nullptr;
  const std::string bad = "{oops\n";
  EXPECT_EQ(capgap_corpus_parse(bad.data(), bad.size(), nullptr, 0, 1, &c), CAPGAP_ERR_DATA);
  EXPECT_NE(std::string(capgap_last_error()).find("line 1"), std::string::npos);
  EXPECT_EQ(capgap_corpus_load("/nonexistent/capgap.jsonl", nullptr, 0, 1, &c), CAPGAP_ERR_DATA);
}

TEST(CApi, CorpusSplitTransform) {
  capgap_corpus* c = nullptr;
  ASSERT_EQ(capgap_corpus_parse(kCorpus, std::strlen(kCorpus), nullptr, 0, 2, &c), CAPGAP_OK);
  EXPECT_EQ(capgap_corpus_size(c), 4u);
  EXPECT_EQ(capgap_corpus_label_count(c), 2u);
  EXPECT_STREQ(capgap_corpus_label(c, 1), "B");
  EXPECT_EQ(capgap_corpus_image_count(c), 2u);

  capgap_split* s = nullptr;
  ASSERT_EQ(capgap_split_make(c, 0.5, 3, &s), CAPGAP_OK);
  EXPECT_EQ(capgap_split_train_images(s), 1u);
  EXPECT_EQ(capgap_split_make(c, 1.5, 3, &s), CAPGAP_ERR_ARGUMENT);

  capgap_transform_options topts;
  capgap_transform_options_init(&topts);
  topts.kind = "shuffle_words";
  char* out = nullptr;
  EXPECT_EQ(capgap_transform_text(&topts, "a b", "k", &out), CAPGAP_ERR_ARGUMENT);
  topts.has_seed = 1;
  topts.seed = 4;
  ASSERT_EQ(capgap_transform_text(&topts, "a b c", "k", &out), CAPGAP_OK);
  EXPECT_EQ(take(out).size(), 5u);
  capgap_corpus* t = nullptr;
  ASSERT_EQ(capgap_transform_corpus(c, &topts, 2, &t), CAPGAP_OK);
  EXPECT_EQ(capgap_corpus_size(t), 4u);
  capgap_corpus_free(t);
  capgap_split_free(s);
  capgap_corpus_free(c);
}

TEST(CApi, TrainEvaluateReport) {
  capgap_synth_config sc;
  capgap_synth_config_init(&sc);
  sc.images = 100;
  capgap_corpus* c = nullptr;
  ASSERT_EQ(capgap_synth_corpus(&sc, &c), CAPGAP_OK);
  capgap_split* s = nullptr;
  ASSERT_EQ(capgap_split_make(c, 0.8, 1, &s), CAPGAP_OK);
  capgap_tfidf_config tf;
  ASSERT_EQ(capgap_tfidf_config_init(&tf, "classifier"), CAPGAP_OK);
  capgap_train_config tc;
  ASSERT_EQ(capgap_train_config_init(&tc, "desk", 1), CAPGAP_OK);
  capgap_classifier* clf = nullptr;
  ASSERT_EQ(capgap_train_text(c, s, &tf, &tc, 2, &clf), CAPGAP_OK) << capgap_last_error();
  EXPECT_EQ(capgap_classifier_is_text(clf), 1);
  capgap_metrics* text = nullptr;
  ASSERT_EQ(capgap_evaluate_text(clf, c, s, 2, &text), CAPGAP_OK);
  EXPECT_GT(capgap_metrics_accuracy(text), 0.9);
  EXPECT_EQ(capgap_metrics_n_test(text), 20 * 9);

  capgap_embeddings* te = nullptr;
  capgap_embeddings* ie = nullptr;
  ASSERT_EQ(capgap_synth_text_embeddings(c, 8, 3.0, 1, "enc", &te), CAPGAP_OK);
  ASSERT_EQ(capgap_synth_image_embeddings(te, 2.0, 2, "img", "flux", &ie), CAPGAP_OK);
  capgap_train_config dc;
  capgap_train_config_init(&dc, "desk", 0);
  capgap_metrics* image = nullptr;
  ASSERT_EQ(capgap_probe(ie, s, c, &dc, nullptr, 2, &image), CAPGAP_OK) << capgap_last_error();

  capgap_report_builder* b = nullptr;
  ASSERT_EQ(capgap_report_builder_new(&b), CAPGAP_OK);
  capgap_report* r = nullptr;
  EXPECT_EQ(capgap_report_assemble(b, &r), CAPGAP_ERR_DATA);
  ASSERT_EQ(capgap_report_add_metrics(b, "text", nullptr, text), CAPGAP_OK);
  ASSERT_EQ(capgap_report_add_metrics(b, "image", "gen", image), CAPGAP_OK);
  EXPECT_EQ(capgap_report_add_metrics(b, "bogus", nullptr, image), CAPGAP_ERR_ARGUMENT);
  ASSERT_EQ(capgap_report_assemble(b, &r), CAPGAP_OK);
  EXPECT_NEAR(capgap_report_gap(r), capgap_report_text_accuracy(r) - capgap_report_image_accuracy(r), 1e-12);
  EXPECT_EQ(std::strlen(capgap_report_digest(r)), 16u);

  const auto dir = std::filesystem::temp_directory_path() / "capgap_capi_report";
  std::filesystem::remove_all(dir);
  char* files = nullptr;
  ASSERT_EQ(capgap_report_export(r, dir.c_str(), "json,csv", &files), CAPGAP_OK);
  EXPECT_NE(take(files).find("report.json"), std::string::npos);
  capgap_report* loaded = nullptr;
  ASSERT_EQ(capgap_report_load((dir / "report.json").c_str(), &loaded), CAPGAP_OK) << capgap_last_error();
  EXPECT_STREQ(capgap_report_digest(loaded), capgap_report_digest(r));
  std::filesystem::remove_all(dir);

  capgap_report_free(loaded);
  capgap_report_free(r);
  capgap_report_builder_free(b);
  capgap_metrics_free(image);
  capgap_metrics_free(text);
  capgap_embeddings_free(ie);
  capgap_embeddings_free(te);
  capgap_classifier_free(clf);
  capgap_split_free(s);
  capgap_corpus_free(c);
}

TEST(CApi, FreeAcceptsNull) {
  capgap_corpus_free(nullptr);
  capgap_split_free(nullptr);
  capgap_metrics_free(nullptr);
  capgap_report_free(nullptr);
  capgap_string_free(nullptr);
}
