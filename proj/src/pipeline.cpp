#include "evtax/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <ostream>
#include <set>
#include <thread>

namespace evtax {

namespace fs = std::filesystem;

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str()); v && *v) return std::string(v);
  return std::nullopt;
}

Json to_json(const TrainOptions& o) {
  return {{"epochs", o.epochs}, {"learning_rate", o.learning_rate}, {"batch_size", o.batch_size},
          {"l2", o.l2}};
}

TrainOptions train_options_from_json(const Json& j) {
  TrainOptions o;
  o.epochs = j.value("epochs", o.epochs);
  o.learning_rate = j.value("learning_rate", o.learning_rate);
  o.batch_size = j.value("batch_size", o.batch_size);
  o.l2 = j.value("l2", o.l2);
  if (o.epochs == 0) throw ConfigError("training: epochs must be positive");
  if (!(o.learning_rate > 0)) throw ConfigError("training: learning_rate must be positive");
  if (!(o.l2 >= 0)) throw ConfigError("training: l2 must be non-negative");
  return o;
}

void set_class_weights(TrainOptions& options, const Json& spec, const Taxonomy& taxonomy) {
  if (spec.is_string()) {
    const auto mode = spec.get<std::string>();
    if (mode == "auto") {
      options.weighting = ClassWeighting::kInverseFrequency;
    } else if (mode == "none") {
      options.weighting = ClassWeighting::kNone;
    } else {
      throw ConfigError("class weights: expected auto, none or an object, got '" + mode + "'");
    }
    return;
  }
  if (!spec.is_object()) throw ConfigError("class weights: expected auto, none or an object");
  options.weighting = ClassWeighting::kExplicit;
  options.explicit_weights.clear();
  for (const auto& [key, value] : spec.items()) {
    if (!value.is_number() || !(value.get<double>() > 0))
      throw ConfigError("class weights: weight for '" + key + "' must be a positive number");
    options.explicit_weights[taxonomy.resolve_key(key).id] = value.get<double>();
  }
}

Json to_json(const EncoderConfig& c) {
  return {{"layers", c.num_layers}, {"model_dim", c.model_dim}, {"heads", c.num_heads},
          {"ffn_dim", c.ffn_dim},   {"max_len", c.max_len},     {"layer_norm_eps", c.layer_norm_eps}};
}

EncoderConfig encoder_config_from_json(const Json& j) {
  EncoderConfig c;
  c.num_layers = j.value("layers", c.num_layers);
  c.model_dim = j.value("model_dim", c.model_dim);
  c.num_heads = j.value("heads", c.num_heads);
  c.ffn_dim = j.value("ffn_dim", c.ffn_dim);
  c.max_len = j.value("max_len", c.max_len);
  c.layer_norm_eps = j.value("layer_norm_eps", c.layer_norm_eps);
  return c;
}

namespace {

struct PathKey {
  const char* key;
  fs::path PipelinePaths::*member;
  const char* default_name;  // nullptr: required
};

constexpr PathKey kPathKeys[] = {
    {"taxonomy", &PipelinePaths::taxonomy, nullptr},
    {"sources", &PipelinePaths::sources, nullptr},
    {"raw_store", &PipelinePaths::raw_store, "raw.jsonl"},
    {"clean_store", &PipelinePaths::clean_store, "clean.jsonl"},
    {"vocab", &PipelinePaths::vocab, "vocab.txt"},
    {"encoder_weights", &PipelinePaths::encoder_weights, "encoder.bin"},
    {"features", &PipelinePaths::features, "features.bin"},
    {"split", &PipelinePaths::split, "split.json"},
    {"model", &PipelinePaths::model, "model.json"},
    {"predictions", &PipelinePaths::predictions, "predictions.jsonl"},
    {"report", &PipelinePaths::report, "report.txt"},
    {"confusion", &PipelinePaths::confusion, "confusion.csv"},
    {"normalized_confusion", &PipelinePaths::normalized_confusion, "confusion_normalized.csv"},
    {"catalog", &PipelinePaths::catalog, "catalog.jsonl"},
    {"catalog_csv", &PipelinePaths::catalog_csv, "catalog.csv"},
};

std::string env_name(std::string key) {
  for (char& c : key) c = static_cast<char>(c >= 'a' && c <= 'z' ? c - 32 : c);
  return "EVTAX_" + key;
}

fs::path anchor(const fs::path& p, const fs::path& base) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

PipelineConfig pipeline_config_from_json(const Json& j, const fs::path& base_dir,
                                         const EnvLookup& env) {
  if (!j.is_object()) throw ConfigError("pipeline config: expected a JSON object");
  PipelineConfig cfg;
  try {
    const Json paths = j.value("paths", Json::object());
    if (!paths.is_object()) throw ConfigError("pipeline config: 'paths' must be an object");
    fs::path workdir = paths.value("workdir", std::string("."));
    if (auto v = env("EVTAX_WORKDIR")) workdir = *v;
    workdir = anchor(workdir, base_dir);
    for (const auto& k : kPathKeys) {
      std::optional<std::string> value;
      if (paths.contains(k.key)) value = paths[k.key].get<std::string>();
      fs::path resolved;
      if (auto v = env(env_name(k.key))) {
        resolved = *v;  // relative overrides follow the process, not the file
      } else if (value) {
        resolved = anchor(*value, base_dir);
      } else if (k.default_name) {
        resolved = workdir / k.default_name;
      } else {
        throw ConfigError(std::string("pipeline config: paths.") + k.key + " is required (or set " +
                          env_name(k.key) + ")");
      }
      cfg.paths.*k.member = resolved;
    }

    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.parallel = j.value("parallel", cfg.parallel);
    if (cfg.parallel == 0) throw ConfigError("pipeline config: parallel must be positive");
    if (j.contains("fetch_time")) {
      auto ts = parse_timestamp(j["fetch_time"].get<std::string>());
      if (!ts) throw ConfigError("pipeline config: fetch_time is not a timestamp");
      cfg.fetch_time_ms = ts->utc_seconds * 1000;
    } else {
      cfg.fetch_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::system_clock::now().time_since_epoch())
                              .count();
    }
    const Json text = j.value("textprep", Json::object());
    cfg.max_chars = text.value("max_chars", cfg.max_chars);
    cfg.vocab_size = text.value("vocab_size", cfg.vocab_size);
    cfg.min_freq = text.value("min_freq", cfg.min_freq);

    cfg.encoder = encoder_config_from_json(j.value("encoder", Json::object()));
    cfg.encoder.seed = cfg.seed;

    Json feat = j.value("featurizer", Json{{"kind", "hashed-ngram"}});
    if (feat.value("kind", std::string{}) == "encoder-cls") {
      if (!feat.contains("weights")) feat["weights"] = cfg.paths.encoder_weights.string();
      if (!feat.contains("vocab")) feat["vocab"] = cfg.paths.vocab.string();
      if (!feat.contains("max_len")) feat["max_len"] = cfg.encoder.max_len;
    }
    cfg.featurizer = featurizer_config_from_json(feat, base_dir);

    const Json training = j.value("training", Json::object());
    cfg.training = train_options_from_json(training);
    cfg.training.seed = cfg.seed;
    cfg.class_weights = training.value("class_weights", Json("auto"));

    const Json sp = j.value("split", Json::object());
    cfg.test_fraction = sp.value("test_fraction", cfg.test_fraction);
    cfg.stratified = sp.value("stratified", cfg.stratified);
    if (!(cfg.test_fraction > 0 && cfg.test_fraction < 1))
      throw ConfigError("pipeline config: split.test_fraction must be in (0, 1)");
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("pipeline config: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path, const EnvLookup& env) {
  if (!fs::exists(path)) throw ConfigError("pipeline config " + path.string() + " not found");
  Json j = Json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw ConfigError("pipeline config " + path.string() + " is not valid JSON");
  return pipeline_config_from_json(j, path.parent_path(), env);
}

// --- stores ------------------------------------------------------------------

void write_clean_store(const fs::path& path, const std::vector<CleanEvent>& events) {
  std::string bytes;
  for (const auto& e : events) bytes += dump_record(to_json(e)) + "\n";
  write_file(path, bytes);
}

ReadResult<CleanEvent> read_clean_store(const fs::path& path) {
  return read_jsonl_as<CleanEvent>(path, [](const Json& j) { return clean_event_from_json(j); });
}

namespace {

constexpr char kFeatureMagic[8] = {'E', 'V', 'T', 'X', 'F', 'E', 'A', '\0'};
constexpr std::uint32_t kFeatureVersion = 1;
static_assert(std::endian::native == std::endian::little);

}  // namespace

void save_features(const Eigen::MatrixXd& features, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kFeatureMagic, sizeof kFeatureMagic);
  out.write(reinterpret_cast<const char*>(&kFeatureVersion), sizeof kFeatureVersion);
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(features.rows()),
                                 static_cast<std::uint64_t>(features.cols())};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  RowMatrix<double> rows = features;
  out.write(reinterpret_cast<const char*>(rows.data()),
            static_cast<std::streamsize>(rows.size() * sizeof(double)));
  if (!out) throw Error("write failed: " + path.string());
}

Eigen::MatrixXd load_features(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read feature store " + path.string());
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t dims[2] = {0, 0};
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  if (!in || std::memcmp(magic, kFeatureMagic, sizeof magic) != 0)
    throw Error("feature store " + path.string() + ": bad header");
  if (version != kFeatureVersion) throw Error("feature store " + path.string() + ": unsupported version");
  RowMatrix<double> rows(static_cast<Eigen::Index>(dims[0]), static_cast<Eigen::Index>(dims[1]));
  in.read(reinterpret_cast<char*>(rows.data()),
          static_cast<std::streamsize>(rows.size() * sizeof(double)));
  if (!in) throw Error("feature store " + path.string() + ": truncated");
  if (in.peek() != std::char_traits<char>::eof())
    throw Error("feature store " + path.string() + ": trailing bytes");
  return rows;
}

void save_split(const SplitResult& split, const fs::path& path) {
  write_file(path, Json{{"train", split.train}, {"test", split.test}}.dump() + "\n");
}

SplitResult load_split(const fs::path& path) {
  Json j = Json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error("split file " + path.string() + " is not valid JSON");
  SplitResult s;
  try {
    s.train = j.at("train").get<std::vector<std::size_t>>();
    s.test = j.at("test").get<std::vector<std::size_t>>();
  } catch (const Json::exception& e) {
    throw Error("split file " + path.string() + ": " + e.what());
  }
  return s;
}

void write_catalog(const fs::path& path, const Catalog& catalog, CatalogFormat format) {
  write_file(path, export_catalog(catalog, format));
}

Catalog read_catalog(const fs::path& path, const Taxonomy& taxonomy) {
  const auto ext = to_lower_ascii(path.extension().string());
  const auto format = ext == ".csv" ? CatalogFormat::kCsv : CatalogFormat::kJsonl;
  return import_catalog(read_file(path), format, taxonomy).catalog;
}

// --- stage helpers -------------------------------------------------------------

CleanRun clean_all(const std::vector<RawEvent>& raw, std::size_t max_chars) {
  CleanRun run;
  auto unique = dedupe(raw);
  run.duplicates = raw.size() - unique.size();
  run.events.reserve(unique.size());
  for (const auto& e : unique) run.events.push_back(clean_event(e, max_chars));
  return run;
}

Vocabulary vocab_from_events(const std::vector<CleanEvent>& events, std::size_t max_size,
                             std::size_t min_freq) {
  std::vector<std::string> corpus;
  corpus.reserve(events.size());
  for (const auto& e : events) corpus.push_back(e.text);
  return build_vocab(corpus, max_size, min_freq);
}

std::vector<Prediction> classify_all(const std::vector<CleanEvent>& events,
                                     const CascadeClassifier& cascade) {
  std::vector<Prediction> out(events.size());
  const std::size_t threads = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = cascade.classify(events[i], i);
  };
  if (threads == 1 || events.size() < 64) {
    work(0, events.size());
    return out;
  }
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (events.size() + threads - 1) / threads;
    for (std::size_t b = 0; b < events.size(); b += chunk)
      pool.emplace_back(work, b, std::min(events.size(), b + chunk));
  }
  return out;
}

ConfusionMatrix confusion_for(const std::vector<Prediction>& predictions, const Taxonomy& taxonomy,
                              const std::optional<std::string>& split) {
  std::vector<Prediction> kept;
  for (const auto& p : predictions)
    if (p.actual && (!split || p.split == split)) kept.push_back(p);
  return confusion(roll_up(std::move(kept), taxonomy), taxonomy.first_level_ids());
}

// --- runner ----------------------------------------------------------------------

namespace {

std::string quote_value(const std::string& v) {
  if (!v.empty() && v.find_first_of(" \t\"=") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

class Runner {
 public:
  Runner(std::ostream& out, RunResult& result) : out_(out), result_(result) {}

  // Returns false once a stage has failed; later stages are skipped.
  template <typename F>
  bool stage(int index, std::string name, F&& body) {
    if (result_.exit_code != 0) return false;
    StageSummary s;
    s.index = index;
    s.name = std::move(name);
    try {
      body(s.counts);
      s.ok = true;
    } catch (const ConfigError& e) {
      s.error = e.what();
      result_.exit_code = 2;
    } catch (const std::exception& e) {
      s.error = e.what();
      result_.exit_code = index == 0 ? 2 : 3;
    }
    out_ << format_stage_line(s) << "\n";
    out_.flush();
    result_.stages.push_back(std::move(s));
    return result_.exit_code == 0;
  }

 private:
  std::ostream& out_;
  RunResult& result_;
};

template <typename T>
std::pair<std::string, std::string> count(const char* key, T value) {
  if constexpr (std::is_convertible_v<T, std::string>) {
    return {key, std::string(value)};
  } else {
    return {key, std::to_string(value)};
  }
}

void require_file(const fs::path& p, const char* key) {
  if (!fs::exists(p))
    throw ConfigError(std::string(key) + " file not found: " + p.string() + " (set paths." + key +
                      " in the config or " + env_name(key) + ")");
}

void remove_if_present(const fs::path& p) {
  std::error_code ec;
  fs::remove(p, ec);
}

}  // namespace

std::string format_stage_line(const StageSummary& s) {
  std::string line = "stage=" + std::to_string(s.index) + " name=" + s.name +
                     " status=" + (s.ok ? "ok" : "failed");
  for (const auto& [k, v] : s.counts) line += " " + k + "=" + quote_value(v);
  if (!s.ok) line += " error=" + quote_value(s.error);
  return line;
}

RunResult run_all(const PipelineConfig& cfg, std::ostream& out) {
  RunResult result;
  Runner run(out, result);
  const auto& paths = cfg.paths;
  Taxonomy taxonomy;
  std::vector<SourceDescriptor> sources;

  using Counts = std::vector<std::pair<std::string, std::string>>;

  run.stage(0, "config", [&](Counts& c) {
    require_file(paths.taxonomy, "taxonomy");
    require_file(paths.sources, "sources");
    try {
      taxonomy = load_taxonomy_file(paths.taxonomy);
      sources = load_sources_file(paths.sources, taxonomy);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    c.push_back(count("categories", taxonomy.nodes().size()));
    c.push_back(count("sources", sources.size()));
  });

  run.stage(1, "ingest", [&](Counts& c) {
    IngestResult ingest = fetch_all(sources, cfg.parallel, cfg.fetch_time_ms);
    std::size_t failed = 0, skipped = 0;
    for (const auto& r : ingest.reports) {
      skipped += r.skipped_missing_title;
      if (r.error) {
        ++failed;
        out << "source=" << quote_value(r.source_id) << " error=" << quote_value(*r.error) << "\n";
      }
    }
    auto unique = dedupe(ingest.events);
    if (unique.empty()) throw Error("no events ingested from " + std::to_string(sources.size()) + " sources");
    remove_if_present(paths.raw_store);  // a run rebuilds its stores from scratch
    std::size_t written = append_raw(paths.raw_store, unique);
    c.push_back(count("fetched", ingest.events.size()));
    c.push_back(count("skipped_missing_title", skipped));
    c.push_back(count("failed_sources", failed));
    c.push_back(count("duplicates", ingest.events.size() - unique.size()));
    c.push_back(count("written", written));
  });

  run.stage(2, "clean", [&](Counts& c) {
    auto raw = read_raw(paths.raw_store);
    CleanRun cleaned = clean_all(raw.records, cfg.max_chars);
    write_clean_store(paths.clean_store, cleaned.events);
    std::size_t labeled = 0;
    for (const auto& e : cleaned.events) labeled += e.label.has_value();
    c.push_back(count("read", raw.records.size()));
    c.push_back(count("corrupt", raw.errors.size()));
    c.push_back(count("duplicates", cleaned.duplicates));
    c.push_back(count("written", cleaned.events.size()));
    c.push_back(count("labeled", labeled));
  });

  run.stage(3, "vocab", [&](Counts& c) {
    auto events = read_clean_store(paths.clean_store).records;
    Vocabulary vocab = vocab_from_events(events, cfg.vocab_size, cfg.min_freq);
    write_file(paths.vocab, serialize_vocab(vocab));
    c.push_back(count("tokens", vocab.size()));
    if (cfg.featurizer.kind == FeaturizerKind::kEncoderCls) {
      const fs::path weights_path = cfg.featurizer.weights_path;
      EncoderConfig enc = cfg.encoder;
      enc.vocab_size = vocab.size();
      enc.max_len = cfg.featurizer.max_len;
      save_weights(init_weights(enc), weights_path);
      c.push_back(count("encoder", weights_path.filename().string()));
    }
  });

  run.stage(4, "featurize", [&](Counts& c) {
    auto events = read_clean_store(paths.clean_store).records;
    Featurizer featurizer(cfg.featurizer);
    Eigen::MatrixXd features = featurize_all(events, featurizer);
    save_features(features, paths.features);
    c.push_back(count("rows", static_cast<std::size_t>(features.rows())));
    c.push_back(count("dim", static_cast<std::size_t>(features.cols())));
  });

  run.stage(5, "split", [&](Counts& c) {
    auto events = read_clean_store(paths.clean_store).records;
    std::vector<std::size_t> labeled;
    std::vector<CategoryId> strata;
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (!events[i].label) continue;
      labeled.push_back(i);
      strata.push_back(taxonomy.first_level_of(*events[i].label));
    }
    if (labeled.empty()) throw Error("no labeled events to split");
    SplitResult local = split(strata, cfg.test_fraction, cfg.seed, cfg.stratified);
    SplitResult global;
    for (auto i : local.train) global.train.push_back(labeled[i]);
    for (auto i : local.test) global.test.push_back(labeled[i]);
    save_split(global, paths.split);
    c.push_back(count("train", global.train.size()));
    c.push_back(count("test", global.test.size()));
  });

  run.stage(6, "train", [&](Counts& c) {
    auto events = read_clean_store(paths.clean_store).records;
    Eigen::MatrixXd features = load_features(paths.features);
    if (static_cast<std::size_t>(features.rows()) != events.size())
      throw Error("feature store has " + std::to_string(features.rows()) + " rows for " +
                  std::to_string(events.size()) + " events");
    SplitResult s = load_split(paths.split);
    std::vector<Eigen::Index> rows;
    std::vector<CategoryId> labels;
    for (auto i : s.train) {
      if (i >= events.size() || !events[i].label) throw Error("split refers to an unlabeled event");
      rows.push_back(static_cast<Eigen::Index>(i));
      labels.push_back(*events[i].label);
    }
    Eigen::MatrixXd x = features(rows, Eigen::all);
    TrainOptions options = cfg.training;
    set_class_weights(options, cfg.class_weights, taxonomy);
    HierarchicalModel model = train_hierarchical(x, labels, taxonomy, options, cfg.featurizer);
    save_model(model, paths.model);
    char loss[32];
    std::snprintf(loss, sizeof loss, "%.6f", model.root.meta.final_loss);
    c.push_back(count("examples", rows.size()));
    c.push_back(count("heads", 1 + model.branches.size()));
    c.push_back(count("final_loss", std::string(loss)));
  });

  run.stage(7, "classify", [&](Counts& c) {
    auto events = read_clean_store(paths.clean_store).records;
    HierarchicalModel model = load_model(paths.model);
    Featurizer featurizer(model.featurizer);
    CascadeClassifier cascade(model, featurizer, SourceIndex(sources), taxonomy);
    auto preds = classify_all(events, cascade);
    SplitResult s = load_split(paths.split);
    for (auto i : s.train) preds.at(i).split = "train";
    for (auto i : s.test) preds.at(i).split = "test";
    write_predictions(paths.predictions, preds);
    std::size_t by_source = 0, by_venue = 0;
    for (const auto& p : preds) {
      by_source += p.method == Method::kRuleSource;
      by_venue += p.method == Method::kRuleVenue;
    }
    c.push_back(count("predictions", preds.size()));
    c.push_back(count("rule_source", by_source));
    c.push_back(count("rule_venue", by_venue));
    c.push_back(count("model", cascade.model_calls()));
  });

  run.stage(8, "evaluate", [&](Counts& c) {
    auto preds = read_predictions(paths.predictions);
    if (!preds.errors.empty()) throw Error("corrupt predictions file " + paths.predictions.string());
    ConfusionMatrix m = confusion_for(preds.records, taxonomy, std::string("test"));
    EvalReport report = evaluate(m);
    result.report_text = render_report(report, taxonomy);
    write_file(paths.report, result.report_text);
    write_file(paths.confusion, confusion_csv(m, taxonomy));
    write_file(paths.normalized_confusion, normalized_confusion_csv(m, taxonomy));
    result.report = report;
    char acc[32];
    std::snprintf(acc, sizeof acc, "%.4f", report.accuracy);
    c.push_back(count("evaluated", static_cast<std::size_t>(m.total())));
    c.push_back(count("accuracy", std::string(acc)));
  });

  run.stage(9, "catalog", [&](Counts& c) {
    auto events = read_clean_store(paths.clean_store).records;
    auto preds = read_predictions(paths.predictions).records;
    Catalog catalog = build_catalog(events, preds, taxonomy);
    write_catalog(paths.catalog, catalog, CatalogFormat::kJsonl);
    write_catalog(paths.catalog_csv, catalog, CatalogFormat::kCsv);
    c.push_back(count("entries", catalog.size()));
  });

  if (result.exit_code == 0) out << "\n" << result.report_text;
  return result;
}

RunResult run_demo(const SyntheticCorpusSpec& spec, const fs::path& workdir, std::ostream& out) {
  fs::create_directories(workdir);
  SyntheticCorpus corpus = generate_corpus(spec);
  write_file(workdir / "corpus.json", corpus_to_api_dump(corpus.events));
  write_file(workdir / "taxonomy.txt", read_file(default_taxonomy_path()));
  Json sources = {{"sources",
                   {{{"source_id", spec.source_id}, {"kind", "api-dump"}, {"location", "corpus.json"}}}}};
  write_file(workdir / "sources.json", sources.dump(2) + "\n");
  Json config = {
      {"paths", {{"workdir", "."}, {"taxonomy", "taxonomy.txt"}, {"sources", "sources.json"}}},
      {"seed", spec.seed},
      {"fetch_time", "2024-01-01T00:00:00+00:00"},
      {"featurizer", {{"kind", "hashed-ngram"}, {"num_buckets", 2048}, {"orders", {1, 2}}}},
      {"split", {{"test_fraction", 0.2}, {"stratified", true}}},
      {"training", to_json(TrainOptions{})},
  };
  config["training"]["class_weights"] = "auto";
  write_file(workdir / "pipeline.json", config.dump(2) + "\n");
  out << "demo events=" << corpus.events.size() << " workdir=" << quote_value(workdir.string()) << "\n";
  // The demo is self-contained, so path overrides from the environment are ignored.
  PipelineConfig cfg = load_pipeline_config(workdir / "pipeline.json",
                                            [](const std::string&) { return std::nullopt; });
  return run_all(cfg, out);
}

}  // namespace evtax
