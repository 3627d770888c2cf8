#include "evtax/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>

#include "evtax/random.hpp"

namespace evtax {

Json to_json(const FeaturizerConfig& cfg) {
  Json j = Json::object();
  if (cfg.kind == FeaturizerKind::kHashedNgram) {
    j["kind"] = "hashed-ngram";
    j["num_buckets"] = cfg.num_buckets;
    j["orders"] = cfg.orders;
    j["seed"] = cfg.hash_seed;
  } else {
    j["kind"] = "encoder-cls";
    j["weights"] = cfg.weights_path;
    j["vocab"] = cfg.vocab_path;
    j["max_len"] = cfg.max_len;
    if (cfg.model_dim) j["dim"] = cfg.model_dim;
  }
  return j;
}

FeaturizerConfig featurizer_config_from_json(const Json& j, const std::filesystem::path& base_dir) {
  FeaturizerConfig cfg;
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "hashed-ngram") {
    cfg.kind = FeaturizerKind::kHashedNgram;
    cfg.num_buckets = j.value("num_buckets", cfg.num_buckets);
    cfg.orders = j.value("orders", cfg.orders);
    cfg.hash_seed = j.value("seed", cfg.hash_seed);
    if (cfg.num_buckets < 2) throw Error("featurizer: num_buckets must be at least 2");
    if (cfg.orders.empty() ||
        std::any_of(cfg.orders.begin(), cfg.orders.end(), [](int n) { return n < 1; }))
      throw Error("featurizer: n-gram orders must be positive");
  } else if (kind == "encoder-cls") {
    cfg.kind = FeaturizerKind::kEncoderCls;
    auto resolve = [&](const std::string& p) {
      if (p.empty() || base_dir.empty() || std::filesystem::path(p).is_absolute()) return p;
      return (base_dir / p).lexically_normal().string();
    };
    cfg.weights_path = resolve(j.at("weights").get<std::string>());
    cfg.vocab_path = resolve(j.at("vocab").get<std::string>());
    cfg.max_len = j.value("max_len", cfg.max_len);
    cfg.model_dim = j.value("dim", std::size_t{0});
  } else {
    throw Error("featurizer: unknown kind '" + kind + "'");
  }
  return cfg;
}

FeaturizerConfig load_featurizer_config(const std::filesystem::path& path) {
  Json j = Json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error("featurizer config is not valid JSON: " + path.string());
  return featurizer_config_from_json(j, path.parent_path());
}

std::size_t ngram_bucket(std::string_view ngram, std::size_t num_buckets, std::uint64_t seed) {
  std::uint64_t state = kFnvOffset;
  for (int i = 0; i < 8; ++i) {
    state ^= (seed >> (8 * i)) & 0xFF;
    state *= kFnvPrime;
  }
  return static_cast<std::size_t>(fnv1a(ngram, state) % num_buckets);
}

Eigen::VectorXd hashed_ngram_features(std::string_view text, std::size_t num_buckets,
                                      const std::vector<int>& orders, std::uint64_t seed) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_buckets));
  std::vector<std::string> words = split_words(to_lower_ascii(text));
  for (int order : orders) {
    auto n = static_cast<std::size_t>(order);
    for (std::size_t i = 0; i + n <= words.size(); ++i) {
      std::string gram = words[i];
      for (std::size_t k = 1; k < n; ++k) gram += " " + words[i + k];
      v[static_cast<Eigen::Index>(ngram_bucket(gram, num_buckets, seed))] += 1.0;
    }
  }
  double norm = v.norm();
  if (norm > 0) v /= norm;
  return v;
}

Featurizer::Featurizer(FeaturizerConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.kind != FeaturizerKind::kEncoderCls) return;
  if (cfg_.weights_path.empty() || !std::filesystem::exists(cfg_.weights_path))
    throw Error("featurizer: missing encoder weight file '" + cfg_.weights_path + "'");
  if (cfg_.vocab_path.empty() || !std::filesystem::exists(cfg_.vocab_path))
    throw Error("featurizer: missing vocabulary file '" + cfg_.vocab_path + "'");
  weights_ = std::make_shared<EncoderWeights<double>>(load_weights(cfg_.weights_path));
  vocab_ = std::make_shared<Vocabulary>(load_vocab_file(cfg_.vocab_path));
  if (vocab_->size() > weights_->config.vocab_size)
    throw Error("featurizer: vocabulary is larger than the encoder's embedding table");
  if (cfg_.max_len > weights_->config.max_len)
    throw Error("featurizer: max_len exceeds the encoder's max_len");
  if (cfg_.model_dim && cfg_.model_dim != weights_->config.model_dim)
    throw Error("featurizer: encoder width differs from the recorded feature dimension");
  cfg_.model_dim = weights_->config.model_dim;
}

std::size_t Featurizer::dim() const {
  return cfg_.kind == FeaturizerKind::kHashedNgram ? cfg_.num_buckets : cfg_.model_dim;
}

Eigen::VectorXd Featurizer::operator()(std::string_view text) const {
  if (cfg_.kind == FeaturizerKind::kHashedNgram)
    return hashed_ngram_features(text, cfg_.num_buckets, cfg_.orders, cfg_.hash_seed);
  return encode(tokenize(text, *vocab_, cfg_.max_len), *weights_);
}

Eigen::MatrixXd featurize_all(const std::vector<CleanEvent>& events, const Featurizer& featurizer) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(events.size()),
                      static_cast<Eigen::Index>(featurizer.dim()));
  const std::size_t threads =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      out.row(static_cast<Eigen::Index>(i)) = featurizer(events[i]).transpose();
  };
  if (threads == 1 || events.size() < 64) {
    work(0, events.size());
    return out;
  }
  {
    std::vector<std::jthread> pool;
    std::size_t chunk = (events.size() + threads - 1) / threads;
    for (std::size_t b = 0; b < events.size(); b += chunk)
      pool.emplace_back(work, b, std::min(events.size(), b + chunk));
  }
  return out;
}

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

std::size_t ClassifierModel::class_index(CategoryId id) const {
  auto it = std::find(classes.begin(), classes.end(), id);
  if (it == classes.end()) throw Error("classifier: class " + std::to_string(id) + " not in model");
  return static_cast<std::size_t>(it - classes.begin());
}

Eigen::VectorXd logits(const Eigen::VectorXd& x, const ClassifierModel& model) {
  if (static_cast<std::size_t>(x.size()) != model.feature_dim())
    throw Error("classifier: feature dimension " + std::to_string(x.size()) +
                " does not match model dimension " + std::to_string(model.feature_dim()));
  const Eigen::Index d = x.size();
  return model.coefficients.leftCols(d) * x + model.coefficients.col(d);
}

Eigen::VectorXd predict_proba(const Eigen::VectorXd& x, const ClassifierModel& model) {
  return softmax(logits(x, model));
}

namespace {

// Softmax probabilities for every row of features, plus per-row log p(target).
Eigen::MatrixXd row_probabilities(const Eigen::MatrixXd& coefficients,
                                  const Eigen::MatrixXd& features) {
  const Eigen::Index d = features.cols();
  if (coefficients.cols() != d + 1) throw Error("classifier: coefficient/feature shape mismatch");
  Eigen::MatrixXd z = features * coefficients.leftCols(d).transpose();
  z.rowwise() += coefficients.col(d).transpose();
  Eigen::VectorXd row_max = z.rowwise().maxCoeff();
  z.colwise() -= row_max;
  return z;  // shifted logits
}

double total_weight(const std::vector<std::size_t>& targets, const std::vector<double>& w) {
  double total = 0;
  for (auto t : targets) total += w.at(t);
  if (!(total > 0)) throw Error("classifier: total sample weight must be positive");
  return total;
}

}  // namespace

double weighted_loss(const Eigen::MatrixXd& coefficients, const Eigen::MatrixXd& features,
                     const std::vector<std::size_t>& targets,
                     const std::vector<double>& class_weights, double l2) {
  Eigen::MatrixXd shifted = row_probabilities(coefficients, features);
  const double wsum = total_weight(targets, class_weights);
  double loss = 0;
  for (Eigen::Index i = 0; i < shifted.rows(); ++i) {
    double log_norm = std::log(shifted.row(i).array().exp().sum());
    auto t = targets[static_cast<std::size_t>(i)];
    loss += class_weights[t] * (log_norm - shifted(i, static_cast<Eigen::Index>(t)));
  }
  const Eigen::Index d = features.cols();
  return loss / wsum + 0.5 * l2 * coefficients.leftCols(d).squaredNorm();
}

Eigen::MatrixXd weighted_loss_gradient(const Eigen::MatrixXd& coefficients,
                                       const Eigen::MatrixXd& features,
                                       const std::vector<std::size_t>& targets,
                                       const std::vector<double>& class_weights, double l2) {
  Eigen::MatrixXd p = row_probabilities(coefficients, features).array().exp();
  const double wsum = total_weight(targets, class_weights);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    p.row(i) /= p.row(i).sum();
    auto t = targets[static_cast<std::size_t>(i)];
    p(i, static_cast<Eigen::Index>(t)) -= 1.0;
    p.row(i) *= class_weights[t] / wsum;
  }
  const Eigen::Index d = features.cols();
  Eigen::MatrixXd grad(coefficients.rows(), d + 1);
  grad.leftCols(d).noalias() = p.transpose() * features;
  grad.col(d) = p.colwise().sum().transpose();
  grad.leftCols(d) += l2 * coefficients.leftCols(d);
  return grad;
}

std::vector<double> inverse_frequency_weights(const std::vector<CategoryId>& labels,
                                              const std::vector<CategoryId>& classes) {
  std::vector<double> w(classes.size(), 0.0);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    auto n = std::count(labels.begin(), labels.end(), classes[c]);
    if (n == 0) throw Error("classifier: class " + std::to_string(classes[c]) + " has no examples");
    w[c] = static_cast<double>(labels.size()) /
           (static_cast<double>(classes.size()) * static_cast<double>(n));
  }
  return w;
}

TrainResult train(const Eigen::MatrixXd& features, const std::vector<CategoryId>& labels,
                  const std::vector<CategoryId>& classes, const TrainOptions& options) {
  if (classes.size() < 2) throw Error("classifier: need at least two classes");
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw Error("classifier: feature rows and labels differ in count");
  if (std::set<CategoryId>(classes.begin(), classes.end()).size() != classes.size())
    throw Error("classifier: duplicate class ids");

  ClassifierModel model;
  model.classes = classes;
  std::vector<std::size_t> targets;
  targets.reserve(labels.size());
  for (CategoryId y : labels) {
    auto it = std::find(classes.begin(), classes.end(), y);
    if (it == classes.end())
      throw Error("classifier: label " + std::to_string(y) + " is not a training class");
    targets.push_back(static_cast<std::size_t>(it - classes.begin()));
  }
  for (std::size_t c = 0; c < classes.size(); ++c)
    if (std::find(targets.begin(), targets.end(), c) == targets.end())
      throw Error("classifier: class " + std::to_string(classes[c]) + " has no examples");

  std::vector<double> weights(classes.size(), 1.0);
  if (options.weighting == ClassWeighting::kInverseFrequency) {
    weights = inverse_frequency_weights(labels, classes);
  } else if (options.weighting == ClassWeighting::kExplicit) {
    for (std::size_t c = 0; c < classes.size(); ++c) {
      auto it = options.explicit_weights.find(classes[c]);
      if (it == options.explicit_weights.end() || !(it->second > 0))
        throw Error("classifier: missing or non-positive weight for class " +
                    std::to_string(classes[c]));
      weights[c] = it->second;
    }
  }

  const Eigen::Index d = features.cols();
  model.coefficients = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(classes.size()), d + 1);
  model.meta = {options.epochs, options.learning_rate, options.batch_size, options.l2,
                options.seed, weights, 0.0};

  TrainResult result;
  std::mt19937_64 rng(options.seed);
  std::vector<Eigen::Index> order(labels.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const std::size_t batch = options.batch_size == 0 ? labels.size() : options.batch_size;

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    seeded_shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      std::size_t end = std::min(order.size(), start + batch);
      std::vector<Eigen::Index> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
      std::vector<std::size_t> batch_targets;
      batch_targets.reserve(rows.size());
      for (auto r : rows) batch_targets.push_back(targets[static_cast<std::size_t>(r)]);
      Eigen::MatrixXd xb = features(rows, Eigen::all);
      model.coefficients -= options.learning_rate *
                            weighted_loss_gradient(model.coefficients, xb, batch_targets,
                                                   weights, options.l2);
    }
    double loss = weighted_loss(model.coefficients, features, targets, weights, options.l2);
    if (!std::isfinite(loss))
      throw Error("classifier: training diverged at epoch " + std::to_string(epoch));
    result.loss_history.push_back(loss);
  }
  result.final_loss = result.loss_history.empty()
                          ? weighted_loss(model.coefficients, features, targets, weights, options.l2)
                          : result.loss_history.back();
  model.meta.final_loss = result.final_loss;
  result.model = std::move(model);
  return result;
}

HierarchicalModel train_hierarchical(const Eigen::MatrixXd& features,
                                     const std::vector<CategoryId>& labels,
                                     const Taxonomy& taxonomy, const TrainOptions& options,
                                     FeaturizerConfig featurizer) {
  HierarchicalModel out;
  out.featurizer = std::move(featurizer);
  std::vector<CategoryId> top;
  top.reserve(labels.size());
  for (CategoryId y : labels) top.push_back(taxonomy.first_level_of(y));
  const std::set<CategoryId> present(top.begin(), top.end());
  const std::vector<CategoryId> classes(present.begin(), present.end());
  out.root = train(features, top, classes, options).model;

  for (CategoryId branch : classes) {
    std::vector<Eigen::Index> rows;
    std::vector<CategoryId> child_labels;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto path = taxonomy.path(labels[i]);
      if (path.size() >= 2 && path[0] == branch) {
        rows.push_back(static_cast<Eigen::Index>(i));
        child_labels.push_back(path[1]);
      }
    }
    std::set<CategoryId> children(child_labels.begin(), child_labels.end());
    if (children.size() < 2) continue;
    Eigen::MatrixXd xb = features(rows, Eigen::all);
    out.branches[branch] =
        train(xb, child_labels, {children.begin(), children.end()}, options).model;
  }
  return out;
}

namespace {

Json head_json(const ClassifierModel& m, std::optional<CategoryId> parent) {
  Json j = Json::object();
  j["parent"] = parent ? Json(*parent) : Json(nullptr);
  j["classes"] = m.classes;
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.coefficients.rows(); ++r) {
    std::vector<double> row(m.coefficients.row(r).begin(), m.coefficients.row(r).end());
    rows.push_back(row);
  }
  j["coefficients"] = rows;
  j["training"] = {{"epochs", m.meta.epochs},       {"learning_rate", m.meta.learning_rate},
                   {"batch_size", m.meta.batch_size}, {"l2", m.meta.l2},
                   {"seed", m.meta.seed},           {"class_weights", m.meta.class_weights},
                   {"final_loss", m.meta.final_loss}};
  return j;
}

ClassifierModel head_from_json(const Json& j, std::size_t feature_dim) {
  ClassifierModel m;
  m.classes = j.at("classes").get<std::vector<CategoryId>>();
  const Json& rows = j.at("coefficients");
  if (m.classes.size() < 2 || rows.size() != m.classes.size())
    throw Error("model: coefficient rows do not match class count");
  m.coefficients.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(feature_dim + 1));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto row = rows[r].get<std::vector<double>>();
    if (row.size() != feature_dim + 1)
      throw Error("model: coefficient width " + std::to_string(row.size()) +
                  " does not match feature dimension " + std::to_string(feature_dim) + " + 1");
    for (std::size_t c = 0; c < row.size(); ++c)
      m.coefficients(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
  }
  if (!m.coefficients.allFinite()) throw Error("model: non-finite coefficient");
  if (j.contains("training")) {
    const Json& t = j["training"];
    m.meta.epochs = t.value("epochs", std::size_t{0});
    m.meta.learning_rate = t.value("learning_rate", 0.0);
    m.meta.batch_size = t.value("batch_size", std::size_t{0});
    m.meta.l2 = t.value("l2", 0.0);
    m.meta.seed = t.value("seed", std::uint64_t{0});
    m.meta.class_weights = t.value("class_weights", std::vector<double>{});
    m.meta.final_loss = t.value("final_loss", 0.0);
  }
  return m;
}

constexpr const char* kModelFormat = "evtax-classifier";
constexpr int kModelVersion = 1;

}  // namespace

void save_model(const HierarchicalModel& model, const std::filesystem::path& path) {
  Json j = Json::object();
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["featurizer"] = to_json(model.featurizer);
  j["feature_dim"] = model.root.feature_dim();
  Json heads = Json::array();
  heads.push_back(head_json(model.root, std::nullopt));
  for (const auto& [branch, head] : model.branches) heads.push_back(head_json(head, branch));
  j["heads"] = heads;
  write_file(path, j.dump(1) + "\n");
}

HierarchicalModel load_model(const std::filesystem::path& path) {
  Json j = Json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object() || j.value("format", "") != kModelFormat)
    throw Error("not a classifier model file: " + path.string());
  if (j.value("version", 0) != kModelVersion) throw Error("model: unsupported version");
  HierarchicalModel m;
  m.featurizer = featurizer_config_from_json(j.at("featurizer"));
  auto dim = j.at("feature_dim").get<std::size_t>();
  std::size_t expected = m.featurizer.kind == FeaturizerKind::kHashedNgram
                             ? m.featurizer.num_buckets
                             : m.featurizer.model_dim;
  if (expected != 0 && expected != dim)
    throw Error("model: feature dimension does not match the featurizer config");
  bool have_root = false;
  for (const Json& h : j.at("heads")) {
    ClassifierModel head = head_from_json(h, dim);
    if (h.at("parent").is_null()) {
      if (have_root) throw Error("model: more than one first-level head");
      m.root = std::move(head);
      have_root = true;
    } else {
      m.branches[h["parent"].get<CategoryId>()] = std::move(head);
    }
  }
  if (!have_root) throw Error("model: no first-level head");
  return m;
}

// --- predictions and cascade ---------------------------------------------------

std::string to_string(Method method) {
  switch (method) {
    case Method::kRuleSource: return "rule-source";
    case Method::kRuleVenue: return "rule-venue";
    case Method::kModel: return "model";
  }
  return "model";
}

Method parse_method(std::string_view text) {
  if (text == "rule-source") return Method::kRuleSource;
  if (text == "rule-venue") return Method::kRuleVenue;
  if (text == "model") return Method::kModel;
  throw Error("unknown classification method '" + std::string(text) + "'");
}

Json to_json(const Prediction& p) {
  Json j = Json::object();
  j["event"] = p.event_index;
  j["source_id"] = p.source_id;
  j["external_id"] = p.external_id ? Json(*p.external_id) : Json(nullptr);
  j["classes"] = p.classes;
  j["scores"] = p.scores;
  j["probabilities"] = p.probabilities;
  j["pred"] = p.predicted;
  j["actual"] = p.actual ? Json(*p.actual) : Json(nullptr);
  j["method"] = to_string(p.method);
  j["text"] = p.text;
  j["split"] = p.split ? Json(*p.split) : Json(nullptr);
  return j;
}

Prediction prediction_from_json(const Json& j) {
  Prediction p;
  p.event_index = j.at("event").get<std::size_t>();
  p.source_id = j.value("source_id", std::string{});
  if (j.contains("external_id") && !j["external_id"].is_null())
    p.external_id = j["external_id"].get<std::string>();
  p.classes = j.value("classes", std::vector<CategoryId>{});
  p.scores = j.value("scores", std::vector<double>{});
  p.probabilities = j.value("probabilities", std::vector<double>{});
  p.predicted = j.at("pred").get<CategoryId>();
  if (j.contains("actual") && !j["actual"].is_null()) p.actual = j["actual"].get<CategoryId>();
  p.method = parse_method(j.at("method").get<std::string>());
  p.text = j.value("text", std::string{});
  if (j.contains("split") && !j["split"].is_null()) p.split = j["split"].get<std::string>();
  return p;
}

void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& preds) {
  JsonlWriter writer(path, false);
  for (const auto& p : preds) writer.write(to_json(p));
}

ReadResult<Prediction> read_predictions(const std::filesystem::path& path) {
  return read_jsonl_as<Prediction>(path, prediction_from_json);
}

SourceIndex::SourceIndex(const std::vector<SourceDescriptor>& sources) {
  for (const auto& s : sources) by_id_.emplace(s.source_id, s);
}

const SourceDescriptor* SourceIndex::find(const std::string& source_id) const {
  auto it = by_id_.find(source_id);
  return it == by_id_.end() ? nullptr : &it->second;
}

CascadeClassifier::CascadeClassifier(const HierarchicalModel& model, const Featurizer& featurizer,
                                     SourceIndex sources, const Taxonomy& taxonomy)
    : model_(model), featurizer_(featurizer), sources_(std::move(sources)) {
  if (featurizer.dim() != model.root.feature_dim())
    throw Error("classifier: featurizer dimension " + std::to_string(featurizer.dim()) +
                " does not match model dimension " + std::to_string(model.root.feature_dim()));
  for (CategoryId c : model.root.classes) taxonomy.resolve(c);
  for (const auto& [branch, head] : model.branches)
    for (CategoryId c : head.classes) taxonomy.resolve(c);
}

Prediction CascadeClassifier::classify(const CleanEvent& event, std::size_t event_index) const {
  Prediction p;
  p.event_index = event_index;
  p.source_id = event.source_id;
  p.external_id = event.external_id;
  p.actual = event.label;
  p.text = event.text;

  if (const SourceDescriptor* src = sources_.find(event.source_id)) {
    if (src->trust) {
      p.predicted = *src->trust;
      p.method = Method::kRuleSource;
      return p;
    }
    if (event.venue) {
      auto it = src->venue_rules.find(to_lower_ascii(*event.venue));
      if (it != src->venue_rules.end()) {
        p.predicted = it->second;
        p.method = Method::kRuleVenue;
        return p;
      }
    }
  }

  ++model_calls_;
  p.method = Method::kModel;
  Eigen::VectorXd x = featurizer_(event);
  Eigen::VectorXd z = logits(x, model_.root);
  Eigen::VectorXd prob = softmax(z);
  Eigen::Index best = 0;
  prob.maxCoeff(&best);
  p.classes = model_.root.classes;
  p.scores.assign(z.begin(), z.end());
  p.probabilities.assign(prob.begin(), prob.end());
  p.predicted = model_.root.classes[static_cast<std::size_t>(best)];
  if (auto branch = model_.branches.find(p.predicted); branch != model_.branches.end()) {
    Eigen::VectorXd sub = logits(x, branch->second);
    Eigen::Index child = 0;
    sub.maxCoeff(&child);
    p.predicted = branch->second.classes[static_cast<std::size_t>(child)];
  }
  return p;
}

Prediction classify_event(const CleanEvent& event, const SourceIndex& sources,
                          const HierarchicalModel& model, const Featurizer& featurizer,
                          const Taxonomy& taxonomy) {
  return CascadeClassifier(model, featurizer, sources, taxonomy).classify(event);
}

}  // namespace evtax
