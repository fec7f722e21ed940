#include "capgap/match.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "capgap/errors.hpp"
#include "capgap/parallel.hpp"
#include "capgap/rng.hpp"
#include "json.hpp"

namespace capgap {

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------- instances

MatchInstances build_instances(const Corpus& corpus, const EmbeddingSet& text,
                               const EmbeddingSet& images, int threads) {
  using Key = std::tuple<std::string, PromptTier, Variant>;
  std::map<Key, std::vector<std::size_t>> siblings;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& r = corpus.records()[i];
    siblings[{r.image_id, r.prompt_tier, r.variant}].push_back(i);
  }
  const std::size_t k = corpus.labels().size();

  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return images.records()[a].item_id < images.records()[b].item_id;
  });

  std::vector<std::optional<MatchInstance>> built(order.size());
  parallel_for(order.size(), threads, [&](std::size_t n) {
    const auto& img = images.records()[order[n]];
    const auto hash = img.item_id.rfind('#');
    const std::string caption_id =
        hash == std::string::npos ? img.item_id : img.item_id.substr(0, hash);
    const auto* caption = corpus.find(caption_id);
    if (!caption) {
      throw DataError("image item '" + img.item_id + "' does not resolve to a caption");
    }
    if (img.source_label != caption->source_label) {
      throw DataError("image item '" + img.item_id + "' is labelled '" + img.source_label +
                      "' but its caption is from '" + caption->source_label + "'");
    }
    double norm = 0.0;
    for (double v : img.embedding) norm += v * v;
    if (norm == 0.0) throw DataError("image item '" + img.item_id + "' has a zero embedding");

    const auto& group = siblings.at({caption->image_id, caption->prompt_tier, caption->variant});
    std::vector<const EmbeddingRecord*> by_label(k, nullptr);
    for (auto idx : group) {
      const auto& sib = corpus.records()[idx];
      const auto c = corpus.label_index(idx);
      if (by_label[c]) return;  // two siblings with one label: ambiguous
      const auto* emb = text.find(sib.caption_id);
      if (!emb) return;
      by_label[c] = emb;
    }
    MatchInstance inst;
    inst.item_id = img.item_id;
    inst.image_id = caption->image_id;
    inst.image = img.embedding;
    inst.truth = *corpus.labels().index_of(caption->source_label);
    for (const auto* emb : by_label) {
      if (!emb) return;
      double n2 = 0.0;
      for (double v : emb->embedding) n2 += v * v;
      if (n2 == 0.0) throw DataError("caption '" + emb->item_id + "' has a zero text embedding");
      inst.candidates.push_back(emb->embedding);
    }
    built[n] = std::move(inst);
  });

  MatchInstances out{corpus.labels(), {}, 0};
  for (auto& b : built) {
    if (b) {
      out.instances.push_back(std::move(*b));
    } else {
      ++out.skipped;
    }
  }
  if (out.instances.empty()) {
    throw DataError("no complete match instances (" + std::to_string(out.skipped) + " skipped)");
  }
  return out;
}

// --------------------------------------------------------------- projection

ProjectionPair ProjectionPair::identity(std::size_t text_dim, std::size_t image_dim,
                                        std::size_t d, double tau) {
  ProjectionPair p{DenseMatrix(text_dim, d), DenseMatrix(image_dim, d), tau};
  for (std::size_t j = 0; j < std::min(text_dim, d); ++j) p.p_text.at(j, j) = 1.0;
  for (std::size_t j = 0; j < std::min(image_dim, d); ++j) p.p_img.at(j, j) = 1.0;
  return p;
}

ProjectionPair ProjectionPair::random(std::size_t text_dim, std::size_t image_dim, std::size_t d,
                                      double tau, std::uint64_t seed) {
  ProjectionPair p{DenseMatrix(text_dim, d), DenseMatrix(image_dim, d), tau};
  Rng rt(derive_seed(seed, "p_text"));
  const double st = 1.0 / std::sqrt(static_cast<double>(text_dim));
  for (double& v : p.p_text.data) v = st * rt.normal();
  Rng ri(derive_seed(seed, "p_img"));
  const double si = 1.0 / std::sqrt(static_cast<double>(image_dim));
  for (double& v : p.p_img.data) v = si * ri.normal();
  return p;
}

namespace {

ojson matrix_json(const DenseMatrix& m) {
  ojson o;
  o["rows"] = m.rows;
  o["cols"] = m.cols;
  o["data"] = m.data;
  return o;
}

DenseMatrix matrix_from(const nlohmann::json& o) {
  DenseMatrix m;
  m.rows = o.at("rows").get<std::size_t>();
  m.cols = o.at("cols").get<std::size_t>();
  m.data = o.at("data").get<std::vector<double>>();
  if (m.data.size() != m.rows * m.cols) throw DataError("matrix data has wrong size");
  for (double v : m.data) {
    if (!std::isfinite(v)) throw DataError("matrix has a non-finite entry");
  }
  return m;
}

}  // namespace

std::string ProjectionPair::to_json() const {
  ojson o;
  o["format"] = "capgap.projection";
  o["version"] = 1;
  o["tau"] = tau;
  o["p_text"] = matrix_json(p_text);
  o["p_img"] = matrix_json(p_img);
  return o.dump();
}

ProjectionPair ProjectionPair::from_json(std::string_view json) {
  try {
    const auto o = nlohmann::json::parse(json);
    if (o.value("format", "") != "capgap.projection") throw DataError("not a capgap projection");
    ProjectionPair p{matrix_from(o.at("p_text")), matrix_from(o.at("p_img")), o.at("tau").get<double>()};
    if (p.p_text.cols != p.p_img.cols) throw DataError("projection shared dimensions differ");
    if (!(p.tau > 0.0)) throw DataError("projection temperature must be > 0");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed projection: ") + e.what());
  }
}

void MatchConfig::validate() const {
  if (dim < 1) throw ArgumentError("shared dimension must be >= 1");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ArgumentError("tau must be > 0");
  train.validate();
}

// ------------------------------------------------------------------ scoring

namespace {

std::vector<double> project(const DenseMatrix& p, std::span<const double> e) {
  if (e.size() != p.rows) {
    throw DataError("embedding dimension " + std::to_string(e.size()) +
                    " does not match projection input dimension " + std::to_string(p.rows));
  }
  std::vector<double> out(p.cols, 0.0);
  for (std::size_t j = 0; j < p.rows; ++j) {
    const double x = e[j];
    if (x == 0.0) continue;
    const auto row = p.row(j);
    for (std::size_t k = 0; k < p.cols; ++k) out[k] += x * row[k];
  }
  return out;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Forward {
  std::vector<double> u;
  double u_norm = 0.0;
  std::vector<std::vector<double>> v;
  std::vector<double> v_norm;
  std::vector<double> cos;
  std::vector<double> scores;
};

Forward forward(const ProjectionPair& pair, const MatchInstance& inst) {
  Forward f;
  f.u = project(pair.p_img, inst.image);
  f.u_norm = norm2(f.u);
  if (f.u_norm == 0.0) throw NumericError("projected image embedding '" + inst.item_id + "' is zero");
  for (const auto& c : inst.candidates) {
    f.v.push_back(project(pair.p_text, c));
    const double n = norm2(f.v.back());
    if (n == 0.0) throw NumericError("projected caption embedding is zero for '" + inst.item_id + "'");
    f.v_norm.push_back(n);
    const double cs = dot(f.u, f.v.back()) / (f.u_norm * n);
    f.cos.push_back(cs);
    f.scores.push_back(cs / pair.tau);
  }
  return f;
}

}  // namespace

Attribution attribute(const ProjectionPair& pair, const MatchInstance& instance) {
  auto f = forward(pair, instance);
  Attribution a;
  a.predicted = argmax(f.scores);
  a.scores = std::move(f.scores);
  return a;
}

double match_loss_and_gradient(const ProjectionPair& pair, std::span<const MatchInstance> instances,
                               std::span<const std::size_t> batch, double weight_decay,
                               std::vector<double>* grad_text, std::vector<double>* grad_img) {
  if (batch.empty()) throw ArgumentError("batch must contain at least one instance");
  const std::size_t d = pair.shared_dim();
  if (grad_text) grad_text->assign(pair.p_text.data.size(), 0.0);
  if (grad_img) grad_img->assign(pair.p_img.data.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (auto idx : batch) {
    const auto& inst = instances[idx];
    const auto f = forward(pair, inst);
    const auto p = softmax(f.scores);
    loss -= std::log(p[inst.truth]);
    if (!grad_text && !grad_img) continue;
    std::vector<double> du(d, 0.0);
    for (std::size_t c = 0; c < f.v.size(); ++c) {
      const double g = (p[c] - (c == inst.truth ? 1.0 : 0.0)) * inv_n / pair.tau;
      const double uv = f.u_norm * f.v_norm[c];
      std::vector<double> dv(d);
      for (std::size_t k = 0; k < d; ++k) {
        du[k] += g * (f.v[c][k] / uv - f.cos[c] * f.u[k] / (f.u_norm * f.u_norm));
        dv[k] = g * (f.u[k] / uv - f.cos[c] * f.v[c][k] / (f.v_norm[c] * f.v_norm[c]));
      }
      if (grad_text) {
        const auto& e = inst.candidates[c];
        for (std::size_t j = 0; j < e.size(); ++j) {
          if (e[j] == 0.0) continue;
          for (std::size_t k = 0; k < d; ++k) (*grad_text)[j * d + k] += e[j] * dv[k];
        }
      }
    }
    if (grad_img) {
      for (std::size_t j = 0; j < inst.image.size(); ++j) {
        if (inst.image[j] == 0.0) continue;
        for (std::size_t k = 0; k < d; ++k) (*grad_img)[j * d + k] += inst.image[j] * du[k];
      }
    }
  }
  loss *= inv_n;
  double sq = 0.0;
  for (double v : pair.p_text.data) sq += v * v;
  for (double v : pair.p_img.data) sq += v * v;
  loss += 0.5 * weight_decay * sq;
  if (weight_decay != 0.0) {
    if (grad_text) {
      for (std::size_t i = 0; i < grad_text->size(); ++i) (*grad_text)[i] += weight_decay * pair.p_text.data[i];
    }
    if (grad_img) {
      for (std::size_t i = 0; i < grad_img->size(); ++i) (*grad_img)[i] += weight_decay * pair.p_img.data[i];
    }
  }
  return loss;
}

// ----------------------------------------------------------------- training

MatchTrainResult train_match(std::span<const MatchInstance> instances, std::size_t text_dim,
                             std::size_t image_dim, const LabelSpace& labels,
                             const MatchConfig& config, int threads) {
  config.validate();
  if (instances.empty()) throw DataError("no match instances to train on");
  std::vector<std::size_t> per_class(labels.size(), 0);
  for (const auto& inst : instances) {
    if (inst.candidates.size() != labels.size() || inst.truth >= labels.size()) {
      throw DataError("match instance '" + inst.item_id + "' does not fit the label space");
    }
    ++per_class[inst.truth];
  }
  for (std::size_t c = 0; c < labels.size(); ++c) {
    if (per_class[c] == 0) {
      throw DataError("label '" + labels.label(c) + "' is never the true match in training");
    }
  }
  const auto& tc = config.train;
  auto pair = config.init == MatchInit::kIdentity
                  ? ProjectionPair::identity(text_dim, image_dim, config.dim, config.tau)
                  : ProjectionPair::random(text_dim, image_dim, config.dim, config.tau, tc.seed);

  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(tc.seed);
  const auto bs = static_cast<std::size_t>(tc.batch_size);
  std::vector<double> gt, gi;
  std::vector<double> vt(pair.p_text.data.size(), 0.0), vi(pair.p_img.data.size(), 0.0);
  MatchTrainResult result{pair, {}};
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    if (tc.shuffle_each_epoch) rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      match_loss_and_gradient(pair, instances, std::span(order).subspan(start, end - start),
                              tc.weight_decay, &gt, &gi);
      for (std::size_t i = 0; i < gt.size(); ++i) {
        vt[i] = tc.momentum * vt[i] + gt[i];
        pair.p_text.data[i] -= tc.learning_rate * vt[i];
      }
      for (std::size_t i = 0; i < gi.size(); ++i) {
        vi[i] = tc.momentum * vi[i] + gi[i];
        pair.p_img.data[i] -= tc.learning_rate * vi[i];
      }
    }
    std::vector<double> per(instances.size());
    parallel_for(instances.size(), threads, [&](std::size_t n) {
      const std::size_t one[1] = {n};
      per[n] = match_loss_and_gradient(pair, instances, one, 0.0, nullptr, nullptr);
    });
    double loss = 0.0;
    for (double v : per) loss += v;
    double sq = 0.0;
    for (double v : pair.p_text.data) sq += v * v;
    for (double v : pair.p_img.data) sq += v * v;
    loss = loss / static_cast<double>(instances.size()) + 0.5 * tc.weight_decay * sq;
    if (!std::isfinite(loss)) {
      throw NumericError("match training diverged at epoch " + std::to_string(epoch + 1));
    }
    result.epoch_loss.push_back(loss);
  }
  result.pair = std::move(pair);
  return result;
}

// --------------------------------------------------------------- evaluation

namespace {

std::size_t bin_of(double p) {
  const auto b = static_cast<std::size_t>(p * static_cast<double>(kHistogramBins));
  return std::min(b, kHistogramBins - 1);
}

}  // namespace

MatchEvaluation evaluate_match(const ProjectionPair& pair, std::span<const MatchInstance> instances,
                               const LabelSpace& labels, int threads) {
  if (instances.empty()) throw DataError("no match instances to evaluate");
  std::vector<std::size_t> truth(instances.size()), pred(instances.size());
  std::vector<double> p_true(instances.size()), p_max(instances.size());
  parallel_for(instances.size(), threads, [&](std::size_t n) {
    const auto a = attribute(pair, instances[n]);
    const auto p = softmax(a.scores);
    truth[n] = instances[n].truth;
    pred[n] = a.predicted;
    p_true[n] = p[instances[n].truth];
    p_max[n] = *std::max_element(p.begin(), p.end());
  });
  MatchEvaluation ev{metrics_from_predictions(labels, truth, pred),
                     std::vector<std::int64_t>(kHistogramBins, 0),
                     std::vector<std::int64_t>(kHistogramBins, 0)};
  for (std::size_t n = 0; n < instances.size(); ++n) {
    ++ev.true_probability_hist[bin_of(p_true[n])];
    ++ev.max_probability_hist[bin_of(p_max[n])];
  }
  return ev;
}

MatchReport run_match(const Corpus& corpus, const EmbeddingSet& text, const EmbeddingSet& images,
                      const SplitAssignment& split, const MatchConfig& config, int threads) {
  config.validate();
  auto built = build_instances(corpus, text, images, threads);
  std::vector<MatchInstance> train_set, test_set;
  for (auto& inst : built.instances) {
    const auto side = side_of_item(inst.item_id, split, &corpus);
    if (!side) throw DataError("match item '" + inst.item_id + "' is not in the split");
    (*side == Side::kTrain ? train_set : test_set).push_back(std::move(inst));
  }
  if (train_set.empty()) throw DataError("train side has no complete match instances");
  if (test_set.empty()) throw DataError("test side has no complete match instances");

  std::vector<std::string> warnings;
  if (config.dim > std::min(text.dim(), images.dim())) {
    warnings.push_back("shared dimension " + std::to_string(config.dim) +
                              " exceeds min(D_text, D_image) = " +
                              std::to_string(std::min(text.dim(), images.dim())));
  }
  auto trained = train_match(train_set, text.dim(), images.dim(), built.labels, config, threads);
  MatchReport report{evaluate_match(trained.pair, test_set, built.labels, threads), 0, 0, 0, 0.0, {}, {}};
  report.warnings = std::move(warnings);
  auto& ctx = report.evaluation.metrics.context();
  ctx["features"] = "match";
  ctx["text_encoder_tag"] = text.encoder_tags();
  ctx["image_encoder_tag"] = images.encoder_tags();
  if (const auto g = images.generator_tags(); !g.empty()) ctx["generator_tag"] = g;
  ctx["train_config_hash"] = config.train.hash();
  report.train_instances = train_set.size();
  report.skipped = built.skipped;
  report.dim = config.dim;
  report.tau = config.tau;
  report.epoch_loss = std::move(trained.epoch_loss);
  return report;
}

std::string MatchReport::to_json() const {
  ojson o;
  o["format"] = "capgap.match";
  o["version"] = 1;
  o["metrics"] = ojson::parse(evaluation.metrics.to_json());
  o["true_probability_hist"] = evaluation.true_probability_hist;
  o["max_probability_hist"] = evaluation.max_probability_hist;
  o["train_instances"] = train_instances;
  o["skipped"] = skipped;
  o["dim"] = dim;
  o["tau"] = tau;
  o["epoch_loss"] = epoch_loss;
  o["warnings"] = warnings;
  return o.dump(1);
}

MatchReport MatchReport::from_json(std::string_view json) {
  try {
    const auto o = nlohmann::json::parse(json);
    if (o.value("format", "") != "capgap.match") throw DataError("not a capgap match report");
    MatchReport r{MatchEvaluation{Metrics::from_json(o.at("metrics").dump()),
                                  o.at("true_probability_hist").get<std::vector<std::int64_t>>(),
                                  o.at("max_probability_hist").get<std::vector<std::int64_t>>()},
                  0, 0, 0, 0.0, {}, {}};
    r.train_instances = o.at("train_instances").get<std::size_t>();
    r.skipped = o.at("skipped").get<std::size_t>();
    r.dim = o.at("dim").get<std::size_t>();
    r.tau = o.at("tau").get<double>();
    r.epoch_loss = o.at("epoch_loss").get<std::vector<double>>();
    r.warnings = o.at("warnings").get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed match report: ") + e.what());
  }
}

}  // namespace capgap
