// evtax: command-line front end for the event classification pipeline.

#include <chrono>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "evtax/pipeline.hpp"

namespace fs = std::filesystem;
using namespace evtax;

namespace {

struct Summary {
  std::string verb;
  std::vector<std::pair<std::string, std::string>> counts;

  template <typename T>
  Summary& add(const char* key, const T& value) {
    std::ostringstream s;
    s << value;
    counts.emplace_back(key, s.str());
    return *this;
  }
  void print() const {
    std::cout << "verb=" << verb << " status=ok";
    for (const auto& [k, v] : counts) std::cout << " " << k << "=" << v;
    std::cout << "\n";
  }
};

Taxonomy taxonomy_or_default(const std::string& path) {
  return load_taxonomy_file(path.empty() ? default_taxonomy_path() : fs::path(path));
}

std::vector<CleanEvent> read_events(const std::string& path) {
  auto r = read_clean_store(path);
  for (const auto& e : r.errors)
    std::cerr << path << ":" << e.line << ": skipped: " << e.message << "\n";
  return r.records;
}

std::set<CategoryId> category_list(const std::string& text, const Taxonomy& taxonomy) {
  std::set<CategoryId> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto b = item.find_first_not_of(' '), e = item.find_last_not_of(' ');
    if (b == std::string::npos) continue;
    out.insert(taxonomy.resolve_key(item.substr(b, e - b + 1)).id);
  }
  return out;
}

Timestamp timestamp_arg(const std::string& text, const char* what) {
  auto ts = parse_timestamp(text);
  if (!ts) throw ConfigError(std::string(what) + ": '" + text + "' is not a timestamp");
  return *ts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event ingestion, cleaning, classification and cataloguing"};
  app.require_subcommand(1);
  std::function<void()> action;

  // ingest
  std::string sources_path, out_path, in_path, taxonomy_path, fetch_time;
  std::size_t parallel = 4;
  auto* ingest = app.add_subcommand("ingest", "Fetch sources and append to a raw store");
  ingest->add_option("--sources", sources_path, "Source config file")->required();
  ingest->add_option("--out", out_path, "Raw store")->required();
  ingest->add_option("--parallel", parallel, "Concurrent fetches")->check(CLI::PositiveNumber);
  ingest->add_option("--taxonomy", taxonomy_path, "Taxonomy file");
  ingest->add_option("--fetch-time", fetch_time, "Timestamp stamped on the first event (default: now)");
  ingest->callback([&] {
    action = [&] {
      Taxonomy taxonomy = taxonomy_or_default(taxonomy_path);
      auto sources = load_sources_file(sources_path, taxonomy);
      std::int64_t base = fetch_time.empty()
                              ? std::chrono::duration_cast<std::chrono::milliseconds>(
                                    std::chrono::system_clock::now().time_since_epoch())
                                    .count()
                              : timestamp_arg(fetch_time, "--fetch-time").utc_seconds * 1000;
      IngestResult r = fetch_all(sources, parallel, base);
      std::size_t failed = 0, skipped = 0;
      for (const auto& s : r.reports) {
        skipped += s.skipped_missing_title;
        if (s.error) {
          ++failed;
          std::cerr << "source " << s.source_id << ": " << *s.error << "\n";
        }
      }
      auto unique = dedupe(r.events);
      std::size_t written = append_raw(out_path, unique);
      Summary{"ingest"}
          .add("fetched", r.events.size())
          .add("skipped_missing_title", skipped)
          .add("failed_sources", failed)
          .add("duplicates", r.events.size() - unique.size())
          .add("written", written)
          .print();
    };
  });

  // clean
  std::size_t max_chars = kDefaultMaxChars;
  auto* clean = app.add_subcommand("clean", "Clean a raw store into a clean store");
  clean->add_option("--in", in_path, "Raw store")->required();
  clean->add_option("--out", out_path, "Clean store")->required();
  clean->add_option("--max-chars", max_chars, "Model text length cap");
  clean->callback([&] {
    action = [&] {
      auto raw = read_raw(in_path);
      for (const auto& e : raw.errors)
        std::cerr << in_path << ":" << e.line << ": skipped: " << e.message << "\n";
      CleanRun r = clean_all(raw.records, max_chars);
      write_clean_store(out_path, r.events);
      Summary{"clean"}
          .add("read", raw.records.size())
          .add("corrupt", raw.errors.size())
          .add("duplicates", r.duplicates)
          .add("written", r.events.size())
          .print();
    };
  });

  // vocab
  std::size_t vocab_size = 8000, min_freq = 1;
  auto* vocab = app.add_subcommand("vocab", "Build a vocabulary from a clean store");
  vocab->add_option("--in", in_path, "Clean store")->required();
  vocab->add_option("--out", out_path, "Vocabulary file")->required();
  vocab->add_option("--size", vocab_size, "Maximum size including special tokens");
  vocab->add_option("--min-freq", min_freq, "Minimum token count");
  vocab->callback([&] {
    action = [&] {
      Vocabulary v = vocab_from_events(read_events(in_path), vocab_size, min_freq);
      write_file(out_path, serialize_vocab(v));
      Summary{"vocab"}.add("tokens", v.size()).print();
    };
  });

  // init-encoder
  std::string vocab_path;
  EncoderConfig enc;
  auto* init_enc = app.add_subcommand("init-encoder", "Write seeded encoder weights for a vocabulary");
  init_enc->add_option("--vocab", vocab_path, "Vocabulary file")->required();
  init_enc->add_option("--out", out_path, "Weight file")->required();
  init_enc->add_option("--layers", enc.num_layers);
  init_enc->add_option("--dim", enc.model_dim);
  init_enc->add_option("--heads", enc.num_heads);
  init_enc->add_option("--ffn", enc.ffn_dim);
  init_enc->add_option("--max-len", enc.max_len);
  init_enc->add_option("--seed", enc.seed);
  init_enc->callback([&] {
    action = [&] {
      enc.vocab_size = load_vocab_file(vocab_path).size();
      save_weights(init_weights(enc), out_path);
      Summary{"init-encoder"}.add("vocab_size", enc.vocab_size).add("dim", enc.model_dim).print();
    };
  });

  // encode
  std::string model_path;
  auto* encode = app.add_subcommand("encode", "CLS vectors for every event into a feature store");
  encode->add_option("--model", model_path, "Encoder weight file")->required();
  encode->add_option("--vocab", vocab_path, "Vocabulary file")->required();
  encode->add_option("--in", in_path, "Clean store")->required();
  encode->add_option("--out", out_path, "Feature store")->required();
  encode->callback([&] {
    action = [&] {
      FeaturizerConfig cfg;
      cfg.kind = FeaturizerKind::kEncoderCls;
      cfg.weights_path = model_path;
      cfg.vocab_path = vocab_path;
      auto weights = load_weights(model_path);
      cfg.max_len = weights.config.max_len;
      Featurizer featurizer(cfg);
      Eigen::MatrixXd x = featurize_all(read_events(in_path), featurizer);
      save_features(x, out_path);
      Summary{"encode"}.add("rows", x.rows()).add("dim", x.cols()).print();
    };
  });

  // train
  std::string featurizer_path, class_weights = "auto", split_path;
  TrainOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "Train the classifier heads");
  train_cmd->add_option("--in", in_path, "Clean store")->required();
  train_cmd->add_option("--featurizer", featurizer_path, "Featurizer config")->required();
  train_cmd->add_option("--out", out_path, "Model file")->required();
  train_cmd->add_option("--epochs", train_opts.epochs)->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", train_opts.learning_rate)->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", train_opts.batch_size, "0 for full batch");
  train_cmd->add_option("--l2", train_opts.l2);
  train_cmd->add_option("--seed", train_opts.seed);
  train_cmd->add_option("--class-weights", class_weights, "auto, none, or a JSON file");
  train_cmd->add_option("--split", split_path, "Split file; only its train indices are used");
  train_cmd->add_option("--taxonomy", taxonomy_path, "Taxonomy file");
  train_cmd->callback([&] {
    action = [&] {
      Taxonomy taxonomy = taxonomy_or_default(taxonomy_path);
      Json weights = class_weights;
      if (class_weights != "auto" && class_weights != "none") {
        weights = Json::parse(read_file(class_weights), nullptr, false);
        if (weights.is_discarded()) throw ConfigError("class weight file is not valid JSON");
      }
      set_class_weights(train_opts, weights, taxonomy);
      auto events = read_events(in_path);
      std::vector<std::size_t> rows;
      if (!split_path.empty()) {
        rows = load_split(split_path).train;
      } else {
        for (std::size_t i = 0; i < events.size(); ++i)
          if (events[i].label) rows.push_back(i);
      }
      std::vector<CleanEvent> chosen;
      std::vector<CategoryId> labels;
      for (auto i : rows) {
        if (i >= events.size() || !events[i].label) throw Error("event " + std::to_string(i) + " is not labeled");
        chosen.push_back(events[i]);
        labels.push_back(*events[i].label);
      }
      FeaturizerConfig fcfg = load_featurizer_config(featurizer_path);
      Featurizer featurizer(fcfg);
      if (fcfg.kind == FeaturizerKind::kEncoderCls) fcfg.model_dim = featurizer.dim();
      auto model = train_hierarchical(featurize_all(chosen, featurizer), labels, taxonomy, train_opts, fcfg);
      save_model(model, out_path);
      Summary{"train"}
          .add("examples", chosen.size())
          .add("heads", 1 + model.branches.size())
          .add("final_loss", model.root.meta.final_loss)
          .print();
    };
  });

  // classify
  auto* classify = app.add_subcommand("classify", "Cascade classification of a clean store");
  classify->add_option("--in", in_path, "Clean store")->required();
  classify->add_option("--model", model_path, "Model file")->required();
  classify->add_option("--sources", sources_path, "Source config (trust and venue rules)")->required();
  classify->add_option("--out", out_path, "Predictions file")->required();
  classify->add_option("--split", split_path, "Split file used to tag predictions");
  classify->add_option("--taxonomy", taxonomy_path, "Taxonomy file");
  classify->callback([&] {
    action = [&] {
      Taxonomy taxonomy = taxonomy_or_default(taxonomy_path);
      auto sources = load_sources_file(sources_path, taxonomy);
      HierarchicalModel model = load_model(model_path);
      Featurizer featurizer(model.featurizer);
      CascadeClassifier cascade(model, featurizer, SourceIndex(sources), taxonomy);
      auto events = read_events(in_path);
      auto preds = classify_all(events, cascade);
      if (!split_path.empty()) {
        SplitResult s = load_split(split_path);
        for (auto i : s.train) preds.at(i).split = "train";
        for (auto i : s.test) preds.at(i).split = "test";
      }
      write_predictions(out_path, preds);
      Summary{"classify"}.add("predictions", preds.size()).add("model_calls", cascade.model_calls()).print();
    };
  });

  // evaluate
  std::string pred_path, confusion_path, normalized_path, split_tag;
  auto* eval = app.add_subcommand("evaluate", "Classification report from predictions");
  eval->add_option("--pred", pred_path, "Predictions file")->required();
  eval->add_option("--out", out_path, "Report file")->required();
  eval->add_option("--taxonomy", taxonomy_path, "Taxonomy file");
  eval->add_option("--confusion", confusion_path, "Confusion matrix CSV");
  eval->add_option("--normalized-confusion", normalized_path, "Row-normalized confusion CSV");
  eval->add_option("--split", split_tag, "Only predictions tagged with this split");
  eval->callback([&] {
    action = [&] {
      Taxonomy taxonomy = taxonomy_or_default(taxonomy_path);
      auto preds = read_predictions(pred_path);
      for (const auto& e : preds.errors)
        std::cerr << pred_path << ":" << e.line << ": skipped: " << e.message << "\n";
      std::optional<std::string> tag;
      if (!split_tag.empty()) tag = split_tag;
      ConfusionMatrix m = confusion_for(preds.records, taxonomy, tag);
      EvalReport report = evaluate(m);
      std::string text = render_report(report, taxonomy);
      write_file(out_path, text);
      if (!confusion_path.empty()) write_file(confusion_path, confusion_csv(m, taxonomy));
      if (!normalized_path.empty()) write_file(normalized_path, normalized_confusion_csv(m, taxonomy));
      std::cout << text;
      Summary{"evaluate"}.add("evaluated", m.total()).add("accuracy", report.accuracy).print();
    };
  });

  // catalog
  auto* catalog = app.add_subcommand("catalog", "Build, filter, import and export catalogs");
  catalog->require_subcommand(1);
  std::string events_path, include, exclude, city, from, to, bbox, format = "jsonl";
  auto* cat_build = catalog->add_subcommand("build", "Catalog from events and predictions");
  cat_build->add_option("--events", events_path, "Clean store")->required();
  cat_build->add_option("--pred", pred_path, "Predictions file")->required();
  cat_build->add_option("--taxonomy", taxonomy_path, "Taxonomy file");
  cat_build->add_option("--out", out_path, "Catalog file (.jsonl or .csv)")->required();
  cat_build->callback([&] {
    action = [&] {
      Taxonomy taxonomy = taxonomy_or_default(taxonomy_path);
      auto preds = read_predictions(pred_path);
      if (!preds.errors.empty()) throw Error("corrupt predictions file " + pred_path);
      Catalog c = build_catalog(read_events(events_path), preds.records, taxonomy);
      bool csv = to_lower_ascii(fs::path(out_path).extension().string()) == ".csv";
      write_catalog(out_path, c, csv ? CatalogFormat::kCsv : CatalogFormat::kJsonl);
      Summary{"catalog-build"}.add("entries", c.size()).print();
    };
  });

  auto* cat_filter = catalog->add_subcommand("filter", "Filter a catalog");
  cat_filter->add_option("--in", in_path, "Catalog file")->required();
  cat_filter->add_option("--out", out_path, "Catalog file")->required();
  cat_filter->add_option("--taxonomy", taxonomy_path, "Taxonomy file");
  cat_filter->add_option("--include", include, "Comma-separated category names or ids");
  cat_filter->add_option("--exclude", exclude, "Comma-separated category names or ids");
  cat_filter->add_option("--city", city);
  cat_filter->add_option("--from", from, "Timestamp");
  cat_filter->add_option("--to", to, "Timestamp");
  cat_filter->add_option("--bbox", bbox, "lat_min,lat_max,lon_min,lon_max");
  cat_filter->callback([&] {
    action = [&] {
      Taxonomy taxonomy = taxonomy_or_default(taxonomy_path);
      CatalogQuery q;
      if (!include.empty()) q.include = category_list(include, taxonomy);
      if (!exclude.empty()) q.exclude = category_list(exclude, taxonomy);
      if (!city.empty()) q.city = city;
      if (!from.empty()) q.from = timestamp_arg(from, "--from");
      if (!to.empty()) q.to = timestamp_arg(to, "--to");
      if (!bbox.empty()) {
        BoundingBox b{};
        if (std::sscanf(bbox.c_str(), "%lf,%lf,%lf,%lf", &b.lat_min, &b.lat_max, &b.lon_min, &b.lon_max) != 4)
          throw ConfigError("--bbox expects lat_min,lat_max,lon_min,lon_max");
        q.bbox = b;
      }
      Catalog in = read_catalog(in_path, taxonomy);
      Catalog out = filter(in, q, taxonomy);
      bool csv = to_lower_ascii(fs::path(out_path).extension().string()) == ".csv";
      write_catalog(out_path, out, csv ? CatalogFormat::kCsv : CatalogFormat::kJsonl);
      Summary{"catalog-filter"}.add("read", in.size()).add("kept", out.size()).print();
    };
  });

  auto* cat_export = catalog->add_subcommand("export", "Write a catalog as csv or jsonl");
  cat_export->add_option("--in", in_path, "Catalog file")->required();
  cat_export->add_option("--out", out_path, "Output file")->required();
  cat_export->add_option("--format", format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
  cat_export->add_option("--taxonomy", taxonomy_path, "Taxonomy file");
  cat_export->callback([&] {
    action = [&] {
      Taxonomy taxonomy = taxonomy_or_default(taxonomy_path);
      Catalog c = read_catalog(in_path, taxonomy);
      write_catalog(out_path, c, parse_catalog_format(format));
      Summary{"catalog-export"}.add("entries", c.size()).print();
    };
  });

  auto* cat_import = catalog->add_subcommand("import", "Read a csv or jsonl catalog, fixing swapped coordinates");
  cat_import->add_option("--in", in_path, "Catalog file")->required();
  cat_import->add_option("--out", out_path, "Catalog file (jsonl)")->required();
  cat_import->add_option("--format", format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
  cat_import->add_option("--taxonomy", taxonomy_path, "Taxonomy file");
  cat_import->callback([&] {
    action = [&] {
      Taxonomy taxonomy = taxonomy_or_default(taxonomy_path);
      ImportResult r = import_catalog(read_file(in_path), parse_catalog_format(format), taxonomy);
      for (const auto& line : r.corrections) std::cerr << in_path << ": " << line << "\n";
      write_catalog(out_path, r.catalog, CatalogFormat::kJsonl);
      Summary{"catalog-import"}.add("entries", r.catalog.size()).add("corrections", r.corrections.size()).print();
    };
  });

  // generate-corpus
  std::string spec_path;
  std::optional<std::uint64_t> seed;
  auto* gen = app.add_subcommand("generate-corpus", "Write a synthetic labeled api-dump");
  gen->add_option("--spec", spec_path, "Corpus spec (default: bundled demo spec)");
  gen->add_option("--out", out_path, "Api-dump file")->required();
  gen->add_option("--seed", seed, "Override the spec seed");
  gen->callback([&] {
    action = [&] {
      auto spec = load_corpus_spec(spec_path.empty() ? default_corpus_spec_path() : fs::path(spec_path));
      if (seed) spec.seed = *seed;
      SyntheticCorpus c = generate_corpus(spec);
      write_file(out_path, corpus_to_api_dump(c.events));
      std::size_t dirty = std::count(c.contaminated.begin(), c.contaminated.end(), true);
      Summary{"generate-corpus"}.add("events", c.events.size()).add("contaminated", dirty).print();
    };
  });

  // demo / run-all
  int exit_code = 0;
  std::string workdir = "evtax-demo", config_path;
  auto* demo = app.add_subcommand("demo", "Generate the synthetic corpus and run every stage");
  demo->add_option("--spec", spec_path, "Corpus spec (default: bundled demo spec)");
  demo->add_option("--workdir", workdir, "Output directory");
  demo->callback([&] {
    action = [&] {
      auto spec = load_corpus_spec(spec_path.empty() ? default_corpus_spec_path() : fs::path(spec_path));
      exit_code = run_demo(spec, workdir, std::cout).exit_code;
    };
  });

  auto* run_all_cmd = app.add_subcommand("run-all", "Run every stage from a pipeline config");
  run_all_cmd->add_option("--config", config_path, "Pipeline config file")->required();
  run_all_cmd->callback([&] {
    action = [&] {
      PipelineConfig cfg;
      try {
        cfg = load_pipeline_config(config_path);
      } catch (const ConfigError& e) {
        std::cout << format_stage_line({0, "config", false, {}, e.what()}) << "\n";
        exit_code = 2;
        return;
      }
      exit_code = run_all(cfg, std::cout).exit_code;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    action();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return exit_code;
}
