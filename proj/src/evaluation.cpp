#include "evtax/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>

#include "evtax/random.hpp"

namespace evtax {

namespace {

std::size_t rounded_count(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
}

void check_fraction(double f) {
  if (!(f > 0.0 && f < 1.0)) throw Error("split: test_fraction must lie strictly between 0 and 1");
}

}  // namespace

std::vector<std::size_t> stratified_test_counts(const std::vector<std::size_t>& class_sizes,
                                                double test_fraction) {
  check_fraction(test_fraction);
  std::size_t n = std::accumulate(class_sizes.begin(), class_sizes.end(), std::size_t{0});
  std::size_t target = rounded_count(n, test_fraction);
  std::vector<std::size_t> counts(class_sizes.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < class_sizes.size(); ++c) {
    double quota = static_cast<double>(class_sizes[c]) * test_fraction;
    counts[c] = static_cast<std::size_t>(std::floor(quota));
    assigned += counts[c];
    remainders.emplace_back(quota - std::floor(quota), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < target && k < remainders.size(); ++k, ++assigned)
    ++counts[remainders[k].second];
  return counts;
}

SplitResult split(const std::vector<CategoryId>& labels, double test_fraction, std::uint64_t seed,
                  bool stratified) {
  check_fraction(test_fraction);
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> in_test(labels.size(), 0);
  if (stratified) {
    std::map<CategoryId, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    std::vector<std::size_t> sizes;
    for (const auto& [id, members] : by_class) {
      if (members.size() < 2)
        throw Error("split: class " + std::to_string(id) + " is too small to stratify");
      sizes.push_back(members.size());
    }
    auto counts = stratified_test_counts(sizes, test_fraction);
    std::size_t c = 0;
    for (auto& [id, members] : by_class) {
      seeded_shuffle(members, rng);
      for (std::size_t k = 0; k < counts[c]; ++k) in_test[members[k]] = 1;
      ++c;
    }
  } else {
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    seeded_shuffle(order, rng);
    std::size_t target = rounded_count(labels.size(), test_fraction);
    for (std::size_t k = 0; k < target; ++k) in_test[order[k]] = 1;
  }
  SplitResult out;
  for (std::size_t i = 0; i < labels.size(); ++i) (in_test[i] ? out.test : out.train).push_back(i);
  return out;
}

ConfusionMatrix::ConfusionMatrix(std::vector<CategoryId> class_ids)
    : classes(std::move(class_ids)) {
  auto c = static_cast<Eigen::Index>(classes.size());
  counts = CountMatrix::Zero(c, c);
}

std::size_t ConfusionMatrix::index_of(CategoryId id) const {
  auto it = std::find(classes.begin(), classes.end(), id);
  if (it == classes.end())
    throw Error("confusion: label " + std::to_string(id) + " is outside the class list");
  return static_cast<std::size_t>(it - classes.begin());
}

void ConfusionMatrix::add(CategoryId actual, CategoryId predicted) {
  ++counts(static_cast<Eigen::Index>(index_of(actual)), static_cast<Eigen::Index>(index_of(predicted)));
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes != classes) throw Error("confusion: merging matrices over different classes");
  counts += other.counts;
  return *this;
}

ConfusionMatrix confusion(const std::vector<Prediction>& predictions,
                          const std::vector<CategoryId>& classes) {
  ConfusionMatrix m(classes);
  for (const auto& p : predictions) {
    if (!p.actual) throw Error("confusion: prediction for event " + std::to_string(p.event_index) +
                               " has no actual label");
    m.add(*p.actual, p.predicted);
  }
  return m;
}

ConfusionMatrix confusion(const std::vector<CategoryId>& actual,
                          const std::vector<CategoryId>& predicted,
                          const std::vector<CategoryId>& classes) {
  if (actual.size() != predicted.size()) throw Error("confusion: length mismatch");
  ConfusionMatrix m(classes);
  for (std::size_t i = 0; i < actual.size(); ++i) m.add(actual[i], predicted[i]);
  return m;
}

Eigen::MatrixXd normalize_rows(const ConfusionMatrix& m) {
  Eigen::MatrixXd out = m.counts.cast<double>();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    double sum = out.row(r).sum();
    if (sum > 0) out.row(r) /= sum;
  }
  return out;
}

std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& m) {
  std::vector<ClassMetrics> out;
  for (std::size_t c = 0; c < m.classes.size(); ++c) {
    auto i = static_cast<Eigen::Index>(c);
    ClassMetrics cm;
    cm.id = m.classes[c];
    const auto tp = m.counts(i, i);
    const auto predicted = m.counts.col(i).sum();
    const auto actual = m.counts.row(i).sum();
    cm.support = actual;
    if (predicted > 0)
      cm.precision = static_cast<double>(tp) / static_cast<double>(predicted);
    else
      cm.precision_undefined = true;
    if (actual > 0)
      cm.recall = static_cast<double>(tp) / static_cast<double>(actual);
    else
      cm.recall_undefined = true;
    if (cm.precision + cm.recall > 0)
      cm.f1 = 2 * cm.precision * cm.recall / (cm.precision + cm.recall);
    else
      cm.f1_undefined = true;
    out.push_back(cm);
  }
  return out;
}

EvalReport aggregate(const std::vector<ClassMetrics>& per_class) {
  if (per_class.empty()) throw Error("aggregate: no classes");
  EvalReport r;
  r.classes = per_class;
  const double n = static_cast<double>(per_class.size());
  double wp = 0, wr = 0, wf = 0;
  for (const auto& c : per_class) {
    r.macro.precision += c.precision / n;
    r.macro.recall += c.recall / n;
    r.macro.f1 += c.f1 / n;
    r.total_support += c.support;
    const auto s = static_cast<double>(c.support);
    wp += c.precision * s;
    wr += c.recall * s;
    wf += c.f1 * s;
  }
  if (r.total_support > 0) {
    const auto total = static_cast<double>(r.total_support);
    r.weighted = {wp / total, wr / total, wf / total};
    r.accuracy = wr / total;
  }
  return r;
}

EvalReport evaluate(const ConfusionMatrix& m) {
  EvalReport r = aggregate(per_class_metrics(m));
  if (m.total() > 0)
    r.accuracy = static_cast<double>(m.counts.trace()) / static_cast<double>(m.total());
  return r;
}

std::string format_rate(double value) {
  // 1e-9 absorbs binary representation error so 0.865 rounds up.
  double cents = std::floor(value * 100.0 + 0.5 + 1e-9);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", cents / 100.0);
  return buf;
}

std::string render_report(const EvalReport& report, const Taxonomy& taxonomy) {
  std::vector<std::string> labels;
  for (const auto& c : report.classes)
    labels.push_back("Category " + std::to_string(c.id) + " (" + taxonomy.resolve(c.id).name + ")");
  std::size_t width = std::string("weighted avg").size();
  for (const auto& l : labels) width = std::max(width, l.size());

  auto line = [&](const std::string& label, const std::string& p, const std::string& r,
                  const std::string& f, const std::string& s) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%*s %9s %9s %9s %9s\n", static_cast<int>(width),
                  label.c_str(), p.c_str(), r.c_str(), f.c_str(), s.c_str());
    return std::string(buf);
  };

  std::string out = line("", "precision", "recall", "f1-score", "support") + "\n";
  if (report.total_support == 0) return out + line("no events evaluated", "", "", "", "0");
  for (std::size_t i = 0; i < report.classes.size(); ++i) {
    const auto& c = report.classes[i];
    out += line(labels[i], format_rate(c.precision), format_rate(c.recall), format_rate(c.f1),
                std::to_string(c.support));
  }
  const auto total = std::to_string(report.total_support);
  out += "\n";
  out += line("accuracy", "", "", format_rate(report.accuracy), total);
  out += line("macro avg", format_rate(report.macro.precision), format_rate(report.macro.recall),
              format_rate(report.macro.f1), total);
  out += line("weighted avg", format_rate(report.weighted.precision),
              format_rate(report.weighted.recall), format_rate(report.weighted.f1), total);
  return out;
}

namespace {

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_header(const ConfusionMatrix& m, const Taxonomy& taxonomy) {
  std::string out = "actual";
  for (CategoryId c : m.classes) out += "," + csv_cell(taxonomy.resolve(c).name);
  return out + "\n";
}

}  // namespace

std::string confusion_csv(const ConfusionMatrix& m, const Taxonomy& taxonomy) {
  std::string out = csv_header(m, taxonomy);
  for (Eigen::Index r = 0; r < m.counts.rows(); ++r) {
    out += csv_cell(taxonomy.resolve(m.classes[static_cast<std::size_t>(r)]).name);
    for (Eigen::Index c = 0; c < m.counts.cols(); ++c) out += "," + std::to_string(m.counts(r, c));
    out += "\n";
  }
  return out;
}

std::string normalized_confusion_csv(const ConfusionMatrix& m, const Taxonomy& taxonomy) {
  Eigen::MatrixXd norm = normalize_rows(m);
  std::string out = csv_header(m, taxonomy);
  char buf[32];
  for (Eigen::Index r = 0; r < norm.rows(); ++r) {
    out += csv_cell(taxonomy.resolve(m.classes[static_cast<std::size_t>(r)]).name);
    for (Eigen::Index c = 0; c < norm.cols(); ++c) {
      std::snprintf(buf, sizeof buf, ",%.6f", norm(r, c));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::vector<Prediction> roll_up(std::vector<Prediction> predictions, const Taxonomy& taxonomy) {
  for (auto& p : predictions) {
    p.predicted = taxonomy.first_level_of(p.predicted);
    if (p.actual) p.actual = taxonomy.first_level_of(*p.actual);
  }
  return predictions;
}

}  // namespace evtax
