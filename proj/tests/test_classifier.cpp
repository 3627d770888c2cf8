#include <sstream>

#include "doctest.h"

#include "oracles.hpp"
#include "support.hpp"

using namespace evtax;

namespace {

Eigen::MatrixXd random_dense(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * (2 * uniform_unit(rng) - 1);
  return m;
}

// Bucket of one n-gram, recomputed byte by byte.
std::size_t bucket_oracle(const std::string& gram, std::size_t buckets, std::uint64_t seed) {
  std::uint64_t h = 14695981039346656037ULL;
  std::string bytes;
  for (int i = 0; i < 8; ++i) bytes += static_cast<char>((seed >> (8 * i)) & 0xFF);
  bytes += gram;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h % buckets;
}

ClassifierModel model_with(Eigen::MatrixXd coefficients, std::vector<CategoryId> classes) {
  ClassifierModel m;
  m.coefficients = std::move(coefficients);
  m.classes = std::move(classes);
  return m;
}

CleanEvent event(std::string source, std::string text, std::optional<std::string> venue = {}) {
  CleanEvent e;
  e.source_id = std::move(source);
  e.text = e.title = std::move(text);
  e.venue = std::move(venue);
  return e;
}

}  // namespace

TEST_CASE("logistic") {
  CHECK(logistic(0) == 0.5);
  CHECK(logistic(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(logistic(1000) == 1.0);
  CHECK(logistic(-1000) >= 0.0);
  CHECK(std::isfinite(logistic(-1000)));
  for (double z : {-30.0, -2.5, 0.1, 4.0, 30.0}) CHECK(logistic(z) + logistic(-z) == doctest::Approx(1.0));
}

TEST_CASE("hashed n-gram features") {
  CHECK(hashed_ngram_features("", 64, {1, 2}, 0) == Eigen::VectorXd::Zero(64));
  std::mt19937_64 rng(12);
  const std::vector<std::string> words = {"jazz", "night", "opera", "the", "Jazz", "gala"};
  for (int round = 0; round < 200; ++round) {
    std::vector<std::string> tokens;
    std::string text;
    for (std::size_t i = 0, n = uniform_below(rng, 12); i < n; ++i) {
      tokens.push_back(to_lower_ascii(words[uniform_below(rng, words.size())]));
      text += (i ? "  " : "") + tokens.back();
    }
    std::size_t buckets = 1 + uniform_below(rng, 40);
    std::uint64_t seed = uniform_below(rng, 3);
    Eigen::VectorXd expect = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(buckets));
    for (int order : {1, 2, 3}) {
      for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
        std::string gram;
        for (int k = 0; k < order; ++k) gram += (k ? " " : "") + tokens[i + k];
        expect[static_cast<Eigen::Index>(bucket_oracle(gram, buckets, seed))] += 1;
      }
    }
    if (expect.norm() > 0) expect /= expect.norm();
    Eigen::VectorXd got = hashed_ngram_features(text, buckets, {1, 2, 3}, seed);
    CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-15);
    if (!tokens.empty()) CHECK(got.norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("featurizer configs") {
  FeaturizerConfig cfg;
  cfg.num_buckets = 32;
  Featurizer f(cfg);
  CHECK(f.dim() == 32);
  CHECK(f("a b") == f("A  b"));
  auto back = featurizer_config_from_json(to_json(cfg));
  CHECK(back.num_buckets == 32);
  CHECK(back.orders == cfg.orders);

  FeaturizerConfig enc;
  enc.kind = FeaturizerKind::kEncoderCls;
  enc.weights_path = "/nonexistent/w.bin";
  enc.vocab_path = "/nonexistent/v.txt";
  CHECK_THROWS_AS(Featurizer{enc}, Error);
}

TEST_CASE("encoder-cls featurizer is deterministic") {
  testing::TempDir dir;
  Vocabulary vocab({"jazz", "night", "opera"});
  write_file(dir / "vocab.txt", serialize_vocab(vocab));
  EncoderConfig c;
  c.model_dim = 8;
  c.num_heads = 2;
  c.ffn_dim = 16;
  c.max_len = 16;
  c.vocab_size = vocab.size();
  c.seed = 3;
  save_weights(init_weights(c), dir / "enc.bin");
  FeaturizerConfig cfg;
  cfg.kind = FeaturizerKind::kEncoderCls;
  cfg.weights_path = (dir / "enc.bin").string();
  cfg.vocab_path = (dir / "vocab.txt").string();
  cfg.max_len = 16;
  Featurizer f(cfg);
  CHECK(f.dim() == 8);
  Eigen::VectorXd a = f("jazz night"), b = f("jazz night");
  CHECK(a == b);
  CHECK(a.allFinite());
  Featurizer g(cfg);
  CHECK(g("jazz night") == a);
}

TEST_CASE("predict_proba") {
  auto zero = model_with(Eigen::MatrixXd::Zero(7, 4), {0, 1, 2, 3, 4, 5, 6});
  auto p = predict_proba(Eigen::VectorXd::Ones(3), zero);
  for (int i = 0; i < 7; ++i) CHECK(p[i] == doctest::Approx(1.0 / 7).epsilon(1e-15));

  std::mt19937_64 rng(13);
  for (int i = 0; i < 500; ++i) {
    Eigen::Index c = 2 + static_cast<Eigen::Index>(uniform_below(rng, 6));
    Eigen::Index d = 1 + static_cast<Eigen::Index>(uniform_below(rng, 6));
    std::vector<CategoryId> classes(static_cast<std::size_t>(c));
    std::iota(classes.begin(), classes.end(), 0);
    auto m = model_with(random_dense(rng, c, d + 1, 1), classes);
    Eigen::VectorXd x = random_dense(rng, d, 1, 2).col(0);
    Eigen::VectorXd prob = predict_proba(x, m);
    CHECK(std::abs(prob.sum() - 1) < 1e-9);
    CHECK(prob.minCoeff() > 0);
    CHECK(prob.maxCoeff() < 1);
    Eigen::Index a = 0, b = 0;
    prob.maxCoeff(&a);
    logits(x, m).maxCoeff(&b);
    CHECK(a == b);

    auto shifted = m;
    shifted.coefficients.col(d).array() += 17.5;
    CHECK((predict_proba(x, shifted) - prob).cwiseAbs().maxCoeff() < 1e-12);

    if (c == 2) {
      double z = (m.coefficients.row(1).head(d) - m.coefficients.row(0).head(d)).dot(x) +
                 m.coefficients(1, d) - m.coefficients(0, d);
      CHECK(std::abs(prob[1] - logistic(z)) < 1e-12);
      CHECK(std::abs(prob[0] - (1 - logistic(z))) < 1e-12);
    }
  }
}

TEST_CASE("loss gradient matches central differences") {
  std::mt19937_64 rng(14);
  for (int round = 0; round < 100; ++round) {
    Eigen::Index c = 2 + static_cast<Eigen::Index>(uniform_below(rng, 4));
    Eigen::Index d = 1 + static_cast<Eigen::Index>(uniform_below(rng, 5));
    Eigen::Index n = 1 + static_cast<Eigen::Index>(uniform_below(rng, 12));
    Eigen::MatrixXd b = random_dense(rng, c, d + 1, 1);
    Eigen::MatrixXd x = random_dense(rng, n, d, 2);
    std::vector<std::size_t> t;
    for (Eigen::Index i = 0; i < n; ++i) t.push_back(uniform_below(rng, static_cast<std::uint64_t>(c)));
    std::vector<double> w;
    for (Eigen::Index i = 0; i < c; ++i) w.push_back(0.2 + 3 * uniform_unit(rng));
    double l2 = uniform_below(rng, 2) ? 0.0 : 0.1 * uniform_unit(rng);
    Eigen::MatrixXd analytic = weighted_loss_gradient(b, x, t, w, l2);
    Eigen::MatrixXd numeric = oracle::numeric_gradient(b, x, t, w, l2, 1e-5);
    double rel = (analytic - numeric).cwiseAbs().maxCoeff() /
                 std::max(1e-8, numeric.cwiseAbs().maxCoeff());
    CHECK(rel < 1e-4);
  }
}

TEST_CASE("doubling every class weight leaves the gradient direction") {
  std::mt19937_64 rng(15);
  for (int round = 0; round < 50; ++round) {
    Eigen::MatrixXd b = random_dense(rng, 3, 5, 1);
    Eigen::MatrixXd x = random_dense(rng, 20, 4, 1);
    std::vector<std::size_t> t;
    for (int i = 0; i < 20; ++i) t.push_back(uniform_below(rng, 3));
    std::vector<double> w = {0.5, 1.5, 2.0}, w2 = {1.0, 3.0, 4.0};
    Eigen::MatrixXd g1 = weighted_loss_gradient(b, x, t, w, 0.01);
    Eigen::MatrixXd g2 = weighted_loss_gradient(b, x, t, w2, 0.01);
    Eigen::Map<Eigen::VectorXd> u(g1.data(), g1.size()), v(g2.data(), g2.size());
    double cosine = u.dot(v) / (u.norm() * v.norm());
    CHECK(std::abs(cosine - 1) < 1e-9);
  }
}

TEST_CASE("inverse frequency weights") {
  auto w = inverse_frequency_weights({0, 0, 0, 1}, {0, 1});
  CHECK(w[0] == doctest::Approx(4.0 / 6));
  CHECK(w[1] == doctest::Approx(2.0));
}

TEST_CASE("training") {
  SUBCASE("separable points are fit") {
    Eigen::MatrixXd x(2, 2);
    x << 1, 0, 0, 1;
    TrainOptions o;
    o.epochs = 200;
    o.batch_size = 0;
    o.l2 = 0;
    auto r = train(x, {3, 5}, {3, 5}, o);
    CHECK(predict_proba(x.row(0).transpose(), r.model)[0] > 0.5);
    CHECK(predict_proba(x.row(1).transpose(), r.model)[1] > 0.5);
  }
  SUBCASE("zero learning rate keeps zeros") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(4, 3);
    TrainOptions o;
    o.learning_rate = 0;
    o.epochs = 5;
    auto r = train(x, {0, 1, 0, 1}, {0, 1}, o);
    CHECK(r.model.coefficients == Eigen::MatrixXd::Zero(2, 4));
  }
  SUBCASE("bad inputs") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 2);
    TrainOptions o;
    CHECK_THROWS_AS(train(x, {0, 0, 0}, {0, 1}, o), Error);
    CHECK_THROWS_AS(train(x, {0, 1, 2}, {0, 1}, o), Error);
    CHECK_THROWS_AS(train(x, {0, 1, 0}, {0}, o), Error);
    CHECK_THROWS_AS(train(x, {0, 1}, {0, 1}, o), Error);
    o.weighting = ClassWeighting::kExplicit;
    o.explicit_weights = {{0, 1.0}};
    CHECK_THROWS_AS(train(x, {0, 1, 0}, {0, 1}, o), Error);
    o.weighting = ClassWeighting::kNone;
    o.learning_rate = 1e300;
    CHECK_THROWS_AS(train(x * 1e300, {0, 1, 0}, {0, 1}, o), Error);
  }
  SUBCASE("same seed gives the same model") {
    auto corpus = generate_corpus(testing::small_spec(1));
    std::vector<CleanEvent> events;
    std::vector<CategoryId> labels;
    for (const auto& raw : corpus.events) {
      events.push_back(clean_event(raw));
      labels.push_back(*raw.label);
    }
    FeaturizerConfig fc;
    fc.num_buckets = 128;
    Eigen::MatrixXd x = featurize_all(events, Featurizer(fc));
    TrainOptions o;
    o.epochs = 5;
    o.seed = 9;
    auto a = train(x, labels, {0, 1, 3}, o), b = train(x, labels, {0, 1, 3}, o);
    CHECK(a.model.coefficients == b.model.coefficients);
    o.seed = 10;
    CHECK(train(x, labels, {0, 1, 3}, o).model.coefficients != a.model.coefficients);
  }
}

TEST_CASE("full-batch loss does not increase on the synthetic corpus") {
  auto corpus = generate_corpus(testing::small_spec(2));
  std::vector<CleanEvent> events;
  std::vector<CategoryId> labels;
  for (const auto& raw : corpus.events) {
    events.push_back(clean_event(raw));
    labels.push_back(*raw.label);
  }
  FeaturizerConfig fc;
  fc.num_buckets = 256;
  Eigen::MatrixXd x = featurize_all(events, Featurizer(fc));
  TrainOptions o;
  o.epochs = 50;
  o.batch_size = 0;
  o.learning_rate = 0.5;
  auto r = train(x, labels, {0, 1, 3}, o);
  REQUIRE(r.loss_history.size() == 50);
  for (std::size_t i = 1; i < r.loss_history.size(); ++i)
    CHECK(r.loss_history[i] <= r.loss_history[i - 1] + 1e-9);
  CHECK(r.loss_history.back() < std::log(3.0));
}

TEST_CASE("hierarchical model and persistence") {
  const auto& t = testing::two_level_taxonomy();
  std::mt19937_64 rng(16);
  // three well-separated clusters: music/concerts, music/festivals, sports
  std::vector<CategoryId> labels;
  Eigen::MatrixXd x(90, 3);
  for (int i = 0; i < 90; ++i) {
    int k = i % 3;
    labels.push_back(k == 0 ? 10 : k == 1 ? 11 : 3);
    x.row(i) = Eigen::RowVector3d::Unit(k) + 0.1 * random_dense(rng, 1, 3, 1);
  }
  TrainOptions o;
  o.epochs = 100;
  FeaturizerConfig fc;
  fc.num_buckets = 3;
  auto m = train_hierarchical(x, labels, t, o, fc);
  CHECK(m.root.classes == std::vector<CategoryId>{0, 3});
  REQUIRE(m.branches.count(0) == 1);
  CHECK(m.branches.at(0).classes == std::vector<CategoryId>{10, 11});

  testing::TempDir dir;
  save_model(m, dir / "model.json");
  auto back = load_model(dir / "model.json");
  CHECK(back.root.coefficients == m.root.coefficients);
  CHECK(back.root.classes == m.root.classes);
  CHECK(back.branches.at(0).coefficients == m.branches.at(0).coefficients);
  CHECK(back.featurizer.num_buckets == 3);
  save_model(back, dir / "again.json");
  CHECK(read_file(dir / "again.json") == read_file(dir / "model.json"));
}

TEST_CASE("cascade precedence") {
  const auto& t = testing::default_taxonomy();
  FeaturizerConfig fc;
  fc.num_buckets = 16;
  Featurizer f(fc);
  HierarchicalModel model;
  model.featurizer = fc;
  Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(3, 17);
  coef(2, 16) = 1.0;  // class 3 always wins
  model.root = model_with(coef, {0, 1, 3});

  SourceDescriptor trusted, venues, plain;
  trusted.source_id = "music-only";
  trusted.trust = 0;
  trusted.venue_rules["ifema"] = 5;
  venues.source_id = "listings";
  venues.venue_rules["ifema"] = 5;
  plain.source_id = "plain";
  CascadeClassifier cascade(model, f, SourceIndex({trusted, venues, plain}), t);

  auto a = cascade.classify(event("music-only", "anything", "IFEMA"), 4);
  CHECK(a.predicted == 0);
  CHECK(a.method == Method::kRuleSource);
  CHECK(a.event_index == 4);
  CHECK(a.probabilities.empty());
  CHECK(cascade.model_calls() == 0);

  auto b = cascade.classify(event("listings", "expo", "Ifema"));
  CHECK(b.predicted == 5);
  CHECK(b.method == Method::kRuleVenue);
  CHECK(cascade.model_calls() == 0);

  auto c = cascade.classify(event("listings", "expo", "Other hall"));
  CHECK(c.method == Method::kModel);
  CHECK(c.predicted == 3);
  CHECK(std::abs(std::accumulate(c.probabilities.begin(), c.probabilities.end(), 0.0) - 1) < 1e-9);
  CHECK(cascade.model_calls() == 1);

  auto d = cascade.classify(event("unknown-source", "x"));
  CHECK(d.method == Method::kModel);
  CHECK(cascade.model_calls() == 2);

  FeaturizerConfig wrong;
  wrong.num_buckets = 8;
  Featurizer g(wrong);
  CHECK_THROWS_AS(CascadeClassifier(model, g, SourceIndex(), t), Error);
}

TEST_CASE("prediction records round trip") {
  Prediction p;
  p.event_index = 3;
  p.source_id = "s";
  p.external_id = "e";
  p.classes = {0, 1};
  p.scores = {0.25, -1.5};
  p.probabilities = {0.85, 0.15};
  p.predicted = 0;
  p.actual = 1;
  p.method = Method::kModel;
  p.text = "Jazz \"night\"";
  p.split = "test";
  testing::TempDir dir;
  write_predictions(dir / "p.jsonl", {p, p});
  auto back = read_predictions(dir / "p.jsonl");
  REQUIRE(back.records.size() == 2);
  const auto& q = back.records[1];
  CHECK(q.event_index == 3);
  CHECK(q.scores == p.scores);
  CHECK(q.probabilities == p.probabilities);
  CHECK(q.actual == 1);
  CHECK(q.method == Method::kModel);
  CHECK(q.text == p.text);
  CHECK(q.split == "test");
  for (auto m : {Method::kRuleSource, Method::kRuleVenue, Method::kModel})
    CHECK(parse_method(to_string(m)) == m);
}
