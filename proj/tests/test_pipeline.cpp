#include <map>
#include <sstream>

#include "doctest.h"

#include "support.hpp"

using namespace evtax;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kArtifacts = {
    "raw.jsonl",    "clean.jsonl",   "vocab.txt",         "features.bin",
    "split.json",   "model.json",    "predictions.jsonl", "report.txt",
    "confusion.csv", "confusion_normalized.csv", "catalog.jsonl", "catalog.csv"};

std::map<std::string, std::string> artifacts(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& name : kArtifacts)
    if (fs::exists(dir / name)) out[name] = read_file(dir / name);
  return out;
}

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars](const std::string& name) -> std::optional<std::string> {
    auto it = vars.find(name);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

const EnvLookup kNoEnv = env_of({});

std::vector<std::string> words_of(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

}  // namespace

TEST_CASE("corpus counts") {
  SyntheticCorpusSpec spec = testing::small_spec(1);
  spec.events_per_class = {{0, 200}, {1, 100}};
  spec.keyword_pools.erase(3);
  auto corpus = generate_corpus(spec);
  REQUIRE(corpus.events.size() == 300);
  std::map<CategoryId, int> counts;
  for (const auto& e : corpus.events) ++counts[*e.label];
  CHECK(counts[0] == 200);
  CHECK(counts[1] == 100);
  CHECK(corpus.contaminated.size() == 300);

  auto again = generate_corpus(spec);
  CHECK(again.events == corpus.events);
  spec.seed = 2;
  CHECK(generate_corpus(spec).events != corpus.events);
}

TEST_CASE("without noise every content word comes from the class pool") {
  SyntheticCorpusSpec spec = testing::small_spec(3);
  spec.noise_ratio = 0;
  spec.contamination_rate = 0;
  spec.accent_rate = 0.3;
  auto corpus = generate_corpus(spec);
  for (const auto& raw : corpus.events) {
    auto e = clean_event(raw);
    const auto& pool = spec.keyword_pools.at(*raw.label);
    auto words = words_of(to_lower_ascii(e.title + " " + e.description));
    CHECK(words.size() == spec.title_words + spec.description_words);
    for (const auto& w : words) CHECK(std::find(pool.begin(), pool.end(), w) != pool.end());
  }
}

TEST_CASE("contamination rate within five sigma") {
  SyntheticCorpusSpec spec = testing::small_spec(4);
  spec.events_per_class = {{0, 400}, {1, 300}, {3, 300}};
  spec.contamination_rate = 0.1;
  auto corpus = generate_corpus(spec);
  REQUIRE(corpus.events.size() == 1000);
  auto dirty = std::count(corpus.contaminated.begin(), corpus.contaminated.end(), true);
  CHECK(std::abs(static_cast<double>(dirty) - 100.0) <= 5 * std::sqrt(1000 * 0.1 * 0.9));
  // markers are gone after cleaning
  for (std::size_t i = 0; i < corpus.events.size(); ++i) {
    auto e = clean_event(corpus.events[i]);
    CHECK(e.text.find('<') == std::string::npos);
    CHECK(e.text.find('@') == std::string::npos);
    CHECK(e.text.find("http") == std::string::npos);
  }
}

TEST_CASE("corpus spec validation and JSON") {
  auto spec = testing::small_spec(5);
  CHECK_NOTHROW(spec.validate());
  auto back = corpus_spec_from_json(to_json(spec));
  CHECK(back.keyword_pools == spec.keyword_pools);
  CHECK(back.events_per_class == spec.events_per_class);
  CHECK(back.seed == spec.seed);
  CHECK(generate_corpus(back).events == generate_corpus(spec).events);

  auto overlap = spec;
  overlap.keyword_pools[1].push_back("jazz");
  CHECK_THROWS_AS(overlap.validate(), Error);
  auto full_noise = spec;
  full_noise.noise_ratio = 1.0;
  CHECK_THROWS_AS(full_noise.validate(), Error);
  auto no_pool = spec;
  no_pool.events_per_class[6] = 10;
  CHECK_THROWS_AS(no_pool.validate(), Error);

  auto bundled = load_corpus_spec(default_corpus_spec_path());
  CHECK(bundled.keyword_pools.size() == 7);
  std::size_t total = 0;
  for (const auto& [id, n] : bundled.events_per_class) total += n;
  CHECK(total >= 2000);
  CHECK(bundled.events_per_class.at(0) == 2 * bundled.events_per_class.at(1));
}

TEST_CASE("api dump of the corpus parses back") {
  auto corpus = generate_corpus(testing::small_spec(6));
  SourceDescriptor s;
  s.source_id = "synthetic";
  auto parsed = parse_api_dump(corpus_to_api_dump(corpus.events), s);
  REQUIRE(parsed.events.size() == corpus.events.size());
  for (std::size_t i = 0; i < corpus.events.size(); ++i) {
    CHECK(parsed.events[i].title_raw == corpus.events[i].title_raw);
    CHECK(parsed.events[i].label == corpus.events[i].label);
    CHECK(parsed.events[i].external_id == corpus.events[i].external_id);
  }
}

TEST_CASE("pipeline config") {
  Json j = {{"paths", {{"workdir", "work"}, {"taxonomy", "tax.txt"}, {"sources", "/abs/sources.json"}}},
            {"seed", 11},
            {"fetch_time", "2024-01-01T00:00:00Z"},
            {"training", {{"epochs", 7}, {"learning_rate", 0.5}, {"batch_size", 0}, {"l2", 0.0}}},
            {"split", {{"test_fraction", 0.25}}}};
  auto cfg = pipeline_config_from_json(j, "/base", kNoEnv);
  CHECK(cfg.paths.taxonomy == fs::path("/base/tax.txt"));
  CHECK(cfg.paths.sources == fs::path("/abs/sources.json"));
  CHECK(cfg.paths.raw_store == fs::path("/base/work/raw.jsonl"));
  CHECK(cfg.paths.catalog_csv == fs::path("/base/work/catalog.csv"));
  CHECK(cfg.seed == 11);
  CHECK(cfg.training.seed == 11);
  CHECK(cfg.encoder.seed == 11);
  CHECK(cfg.training.epochs == 7);
  CHECK(cfg.training.batch_size == 0);
  CHECK(cfg.test_fraction == 0.25);
  CHECK(cfg.fetch_time_ms == 1704067200000);

  auto env = env_of({{"EVTAX_WORKDIR", "/tmp/w"}, {"EVTAX_TAXONOMY", "/etc/tax.txt"},
                     {"EVTAX_SEED", "99"}});
  auto over = pipeline_config_from_json(j, "/base", env);
  CHECK(over.paths.taxonomy == fs::path("/etc/tax.txt"));
  CHECK(over.paths.model == fs::path("/tmp/w/model.json"));
  CHECK(over.seed == 11);

  Json missing = {{"paths", {{"taxonomy", "t"}}}};
  CHECK_THROWS_AS(pipeline_config_from_json(missing, "/", kNoEnv), ConfigError);
  Json bad_fraction = j;
  bad_fraction["split"]["test_fraction"] = 1.5;
  CHECK_THROWS_AS(pipeline_config_from_json(bad_fraction, "/", kNoEnv), ConfigError);
  Json bad_time = j;
  bad_time["fetch_time"] = "yesterday";
  CHECK_THROWS_AS(pipeline_config_from_json(bad_time, "/", kNoEnv), ConfigError);
  CHECK_THROWS_AS(load_pipeline_config("/nonexistent/pipeline.json", kNoEnv), ConfigError);
}

TEST_CASE("class weight specs") {
  const auto& t = testing::default_taxonomy();
  TrainOptions o;
  set_class_weights(o, "none", t);
  CHECK(o.weighting == ClassWeighting::kNone);
  set_class_weights(o, "auto", t);
  CHECK(o.weighting == ClassWeighting::kInverseFrequency);
  set_class_weights(o, Json{{"music", 2.0}, {"3", 0.5}}, t);
  CHECK(o.weighting == ClassWeighting::kExplicit);
  CHECK(o.explicit_weights.at(0) == 2.0);
  CHECK(o.explicit_weights.at(3) == 0.5);
  CHECK_THROWS(set_class_weights(o, Json{{"ballet", 1.0}}, t));
  CHECK_THROWS(set_class_weights(o, "sometimes", t));
}

TEST_CASE("stores round trip") {
  testing::TempDir dir;
  Eigen::MatrixXd m = Eigen::MatrixXd::Random(7, 5);
  save_features(m, dir / "f.bin");
  CHECK(load_features(dir / "f.bin") == m);
  write_file(dir / "bad.bin", "nope");
  CHECK_THROWS_AS(load_features(dir / "bad.bin"), Error);

  SplitResult s{{0, 2, 3}, {1, 4}};
  save_split(s, dir / "s.json");
  auto back = load_split(dir / "s.json");
  CHECK(back.train == s.train);
  CHECK(back.test == s.test);

  std::vector<CleanEvent> events;
  for (const auto& raw : generate_corpus(testing::small_spec(7, 5)).events) events.push_back(clean_event(raw));
  write_clean_store(dir / "c.jsonl", events);
  auto read = read_clean_store(dir / "c.jsonl");
  CHECK(read.errors.empty());
  CHECK(read.records == events);
}

TEST_CASE("clean_all removes duplicates before cleaning") {
  auto raw = generate_corpus(testing::small_spec(8, 5)).events;
  auto doubled = raw;
  doubled.insert(doubled.end(), raw.begin(), raw.end());
  auto run = clean_all(doubled, 1000);
  CHECK(run.duplicates == raw.size());
  CHECK(run.events.size() == raw.size());
}

TEST_CASE("missing taxonomy stops the run at stage 0") {
  testing::TempDir dir;
  write_file(dir / "sources.json", R"({"sources":[]})");
  Json j = {{"paths", {{"workdir", "."}, {"taxonomy", "missing.txt"}, {"sources", "sources.json"}}}};
  auto cfg = pipeline_config_from_json(j, dir.path(), kNoEnv);
  std::ostringstream out;
  auto r = run_all(cfg, out);
  CHECK(r.exit_code == 2);
  REQUIRE(r.stages.size() == 1);
  CHECK(r.stages[0].index == 0);
  CHECK_FALSE(r.stages[0].ok);
  CHECK(r.stages[0].error.find("taxonomy") != std::string::npos);
  CHECK(r.stages[0].error.find("missing.txt") != std::string::npos);
  CHECK(out.str().find("stage=0 name=config status=failed") != std::string::npos);
}

TEST_CASE("a stage failure halts with exit 3") {
  testing::TempDir dir;
  write_file(dir / "taxonomy.txt", read_file(default_taxonomy_path()));
  write_file(dir / "sources.json",
             R"({"sources":[{"source_id":"gone","kind":"feed","location":"nowhere.xml"}]})");
  Json j = {{"paths", {{"workdir", "."}, {"taxonomy", "taxonomy.txt"}, {"sources", "sources.json"}}},
            {"fetch_time", "2024-01-01T00:00:00Z"}};
  std::ostringstream out;
  auto r = run_all(pipeline_config_from_json(j, dir.path(), kNoEnv), out);
  CHECK(r.exit_code == 3);
  REQUIRE(r.stages.size() == 2);
  CHECK(r.stages[1].name == "ingest");
  CHECK_FALSE(r.stages[1].ok);
  CHECK(out.str().find("source=gone") != std::string::npos);
}

TEST_CASE("small demo is deterministic and stages can be rerun from files") {
  testing::TempDir a, b;
  auto spec = testing::small_spec(9);
  std::ostringstream out_a, out_b;
  auto ra = run_demo(spec, a.path(), out_a);
  auto rb = run_demo(spec, b.path(), out_b);
  REQUIRE(ra.exit_code == 0);
  REQUIRE(rb.exit_code == 0);
  CHECK(ra.stages.size() == 10);
  auto first = artifacts(a.path());
  CHECK(first.size() == kArtifacts.size());
  CHECK(first == artifacts(b.path()));
  CHECK(ra.report_text == read_file(a / "report.txt"));
  CHECK(ra.report->accuracy > 0.8);

  // delete downstream outputs and rerun
  for (const char* name : {"model.json", "predictions.jsonl", "report.txt", "catalog.jsonl", "catalog.csv"})
    fs::remove(a / name);
  std::ostringstream again;
  auto rerun = run_all(load_pipeline_config(a / "pipeline.json", kNoEnv), again);
  CHECK(rerun.exit_code == 0);
  CHECK(artifacts(a.path()) == first);

  // the catalog stage alone, from the stores on disk
  const auto& t = testing::default_taxonomy();
  auto events = read_clean_store(a / "clean.jsonl").records;
  auto preds = read_predictions(a / "predictions.jsonl").records;
  auto catalog = build_catalog(events, preds, t);
  CHECK(export_catalog(catalog, CatalogFormat::kCsv) == first["catalog.csv"]);
  CHECK(read_catalog(a / "catalog.jsonl", t) == catalog);

  // the evaluation stage alone
  auto m = confusion_for(preds, t, std::string("test"));
  CHECK(render_report(evaluate(m), t) == first["report.txt"]);
  CHECK(m.total() == static_cast<std::int64_t>(load_split(a / "split.json").test.size()));
}

TEST_CASE("encoder featurizer runs end to end") {
  testing::TempDir dir;
  auto corpus = generate_corpus(testing::small_spec(10, 10));
  write_file(dir / "corpus.json", corpus_to_api_dump(corpus.events));
  write_file(dir / "taxonomy.txt", read_file(default_taxonomy_path()));
  write_file(dir / "sources.json",
             R"({"sources":[{"source_id":"synthetic","kind":"api-dump","location":"corpus.json"}]})");
  Json j = {{"paths", {{"workdir", "."}, {"taxonomy", "taxonomy.txt"}, {"sources", "sources.json"}}},
            {"seed", 3},
            {"fetch_time", "2024-01-01T00:00:00Z"},
            {"encoder", {{"layers", 1}, {"model_dim", 16}, {"heads", 2}, {"ffn_dim", 32}, {"max_len", 32}}},
            {"featurizer", {{"kind", "encoder-cls"}}},
            {"training", {{"epochs", 5}}}};
  write_file(dir / "pipeline.json", j.dump());
  std::ostringstream out;
  auto r = run_all(load_pipeline_config(dir / "pipeline.json", kNoEnv), out);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "encoder.bin"));
  CHECK(load_features(dir / "features.bin").cols() == 16);
  auto bytes = read_file(dir / "catalog.csv");

  std::ostringstream out2;
  auto r2 = run_all(load_pipeline_config(dir / "pipeline.json", kNoEnv), out2);
  CHECK(r2.exit_code == 0);
  CHECK(read_file(dir / "catalog.csv") == bytes);
}
