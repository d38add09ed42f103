// entrain: command-line front end for the repetition analysis pipeline.

#include <CLI11.hpp>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "entrain/error.hpp"
#include "entrain/io.hpp"
#include "entrain/pipeline.hpp"
#include "entrain/quality.hpp"

namespace fs = std::filesystem;
using namespace entrain;

namespace {

struct CorpusFlags {
  std::string corpus;
  std::string format = "generic-jsonl";
  std::string pauses;
  std::size_t window = 10;
};

void add_corpus_flags(CLI::App* app, CorpusFlags& flags, bool required = true) {
  auto* opt = app->add_option("--corpus", flags.corpus, "Corpus file");
  if (required) opt->required();
  app->add_option("--format", flags.format, "generic-jsonl | swda-like | maptask-like")->capture_default_str();
  app->add_option("--pauses", flags.pauses, "maptask | switchboard | none | <file>");
  app->add_option("--window", flags.window, "Context sample size")->capture_default_str();
}

Corpus load(const CorpusFlags& flags) {
  LoadOptions options;
  if (!flags.pauses.empty()) options.pauses = resolve_pauses(flags.pauses);
  if (!fs::exists(flags.corpus)) throw ConfigError("corpus file not found: " + flags.corpus);
  return load_corpus(flags.corpus, parse_corpus_format(flags.format), options);
}

void emit(const fs::path& out_dir, const std::string& name, const std::string& content) {
  fs::create_directories(out_dir);
  io::write_file(out_dir / name, content);
  std::cerr << "wrote " << (out_dir / name).string() << "\n";
}

/// Records for model generations: each generation replaces the target of its sample.
std::vector<RepetitionRecord> generation_records(const Analysis& analysis, const std::vector<GenerationRecord>& gens,
                                                 std::size_t window, const PairOptions& base,
                                                 std::vector<std::string>& warnings) {
  std::map<std::string, std::pair<std::size_t, ContextSample>> samples;
  std::map<std::string, std::vector<const GenerationRecord*>> by_sample;
  for (const auto& g : gens) by_sample[g.sample_id].push_back(&g);
  for (std::size_t i = 0; i < analysis.corpus.dialogues.size(); ++i) {
    for (auto& s : extract_samples(analysis.corpus.dialogues[i], window)) {
      if (!by_sample.count(s.sample_id)) continue;
      auto id = s.sample_id;
      samples.emplace(std::move(id), std::make_pair(i, std::move(s)));
    }
  }
  std::vector<RepetitionRecord> out;
  for (const auto& [id, list] : by_sample) {
    auto it = samples.find(id);
    if (it == samples.end()) {
      warnings.push_back("generation for unknown sample '" + id + "'");
      continue;
    }
    const auto& [dialogue, sample] = it->second;
    for (const auto* g : list) {
      Utterance target;
      target.index = sample.target().index;
      target.speaker = sample.target_speaker;
      target.tokens = tokenize(g->text, analysis.corpus.filled_pauses);
      PairOptions options = base;
      options.producer = g->model;
      options.model_type = g->model_type;
      options.generation_index = g->generation_index;
      auto recs = pair_records(with_target(sample, std::move(target)), analysis.lexica[dialogue], analysis.counts,
                               options);
      out.insert(out.end(), recs.begin(), recs.end());
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lexical and construction repetition analysis for two-party dialogue"};
  app.require_subcommand(1);

  CorpusFlags corpus_flags;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  std::string co_mode = "types";
  std::string pair_mode = "target";

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load and normalise a corpus");
  add_corpus_flags(ingest, corpus_flags);
  ingest->add_option("--out", out_dir, "Output directory");

  // sample
  auto* sample = app.add_subcommand("sample", "Extract sliding-window context samples");
  add_corpus_flags(sample, corpus_flags);
  sample->add_option("--out", out_dir, "Output directory");

  // mine
  auto* mine = app.add_subcommand("mine", "Mine shared constructions per dialogue");
  add_corpus_flags(mine, corpus_flags);
  mine->add_option("--out", out_dir, "Output directory");

  // metrics
  std::string generations_path;
  auto* metrics = app.add_subcommand("metrics", "VO, CO and PMI for utterance pairs");
  add_corpus_flags(metrics, corpus_flags);
  metrics->add_option("--out", out_dir, "Output directory");
  metrics->add_option("--co-mode", co_mode, "types | tokens")->capture_default_str();
  metrics->add_option("--pairs", pair_mode, "target | all")->capture_default_str();
  metrics->add_option("--generations", generations_path, "Model generations to score in place of targets");

  // attrib aggregate
  auto* attrib = app.add_subcommand("attrib", "Attribution processing");
  attrib->require_subcommand(1);
  auto* aggregate_cmd = attrib->add_subcommand("aggregate", "Aggregate token attributions per element");
  std::string attributions_path, records_path;
  std::size_t attrib_window = 10;
  aggregate_cmd->add_option("--input", attributions_path, "Attribution JSONL")->required();
  aggregate_cmd->add_option("--records", records_path, "records.csv to join on");
  aggregate_cmd->add_option("--window", attrib_window, "Context sample size")->capture_default_str();
  aggregate_cmd->add_option("--out", out_dir, "Output directory");

  // quality join
  auto* quality = app.add_subcommand("quality", "Generation quality");
  quality->require_subcommand(1);
  auto* join_cmd = quality->add_subcommand("join", "Join external scores and MAUVE onto generations");
  std::string scores_path, mauve_path;
  join_cmd->add_option("--generations", generations_path, "Generation JSONL")->required();
  join_cmd->add_option("--scores", scores_path, "Per-generation score JSONL");
  join_cmd->add_option("--mauve", mauve_path, "Per-group MAUVE JSONL");
  add_corpus_flags(join_cmd, corpus_flags, false);
  join_cmd->add_option("--out", out_dir, "Output directory");

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Statistical tests");
  stats_cmd->require_subcommand(1);
  auto* decay = stats_cmd->add_subcommand("decay", "Regress CO/VO on distance by speaker relation");
  decay->add_option("--records", records_path, "records.csv")->required();
  decay->add_option("--out", out_dir, "Output directory");
  std::string table_path, column, group, x_col, y_col;
  auto* ttest = stats_cmd->add_subcommand("ttest", "Welch t-test of a column between two groups");
  ttest->add_option("--input", table_path, "CSV file")->required();
  ttest->add_option("--column", column, "Numeric column")->required();
  ttest->add_option("--group", group, "Grouping column with exactly two levels")->required();
  auto* correlate = stats_cmd->add_subcommand("correlate", "Spearman correlation of two columns");
  correlate->add_option("--input", table_path, "CSV file")->required();
  correlate->add_option("--x", x_col, "First column")->required();
  correlate->add_option("--y", y_col, "Second column")->required();

  // synth
  SyntheticSpec spec;
  auto add_spec_flags = [&](CLI::App* cmd) {
    cmd->add_option("--dialogues", spec.n_dialogues)->capture_default_str();
    cmd->add_option("--utterances", spec.utterances_per_dialogue)->capture_default_str();
    cmd->add_option("--vocab", spec.vocab_size)->capture_default_str();
    cmd->add_option("--between-slope", spec.between_slope)->capture_default_str();
    cmd->add_option("--within-slope", spec.within_slope)->capture_default_str();
    cmd->add_option("--between-intercept", spec.between_intercept)->capture_default_str();
    cmd->add_option("--within-intercept", spec.within_intercept)->capture_default_str();
    cmd->add_option("--noise", spec.noise_sigma, "Per-dialogue intercept sd")->capture_default_str();
  };
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with planted decay");
  add_spec_flags(synth);
  synth->add_option("--seed", seed)->capture_default_str();
  synth->add_option("--out", out_dir, "Output directory");

  // run
  bool synthetic = false;
  std::string run_attributions;
  auto* run = app.add_subcommand("run", "Full pipeline");
  add_corpus_flags(run, corpus_flags, false);
  run->add_flag("--synthetic", synthetic, "Use a generated corpus instead of --corpus");
  add_spec_flags(run);
  run->add_option("--seed", seed)->capture_default_str();
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--co-mode", co_mode, "types | tokens")->capture_default_str();
  run->add_option("--pairs", pair_mode, "target | all")->capture_default_str();
  run->add_option("--attributions", run_attributions, "Attribution JSONL to aggregate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }

  try {
    if (*ingest) {
      auto corpus = load(corpus_flags);
      std::vector<Dialogue> normalized;
      for (const auto& d : corpus.dialogues) normalized.push_back(normalize_turns(d));
      emit(out_dir, "corpus.jsonl", dialogues_to_jsonl(normalized));
      emit(out_dir, "corpus_summary.json", corpus_summary_json(corpus, corpus_flags.window));
    } else if (*sample) {
      auto corpus = load(corpus_flags);
      std::vector<SampleSummary> summaries;
      std::string jsonl;
      for (const auto& d : corpus.dialogues) {
        auto samples = extract_samples(normalize_turns(d), corpus_flags.window);
        for (const auto& s : samples) summaries.push_back({s.sample_id, s.dialogue_id, s.start, s.target_speaker});
        jsonl += samples_to_jsonl(samples);
      }
      emit(out_dir, "samples.csv", samples_to_csv(summaries));
      emit(out_dir, "samples.jsonl", jsonl);
    } else if (*mine) {
      AnalysisOptions options;
      options.window = corpus_flags.window;
      auto analysis = analyze(load(corpus_flags), options);
      std::string lexicon;
      for (const auto& l : analysis.lexica) lexicon += lexicon_to_jsonl(l);
      emit(out_dir, "lexicon.jsonl", lexicon);
      emit(out_dir, "construction_stats.csv", construction_stats_to_csv(analysis.construction_stats));
    } else if (*metrics) {
      AnalysisOptions options;
      options.window = corpus_flags.window;
      options.co_mode = parse_co_mode(co_mode);
      options.pair_mode = parse_pair_mode(pair_mode);
      options.construction_stats = false;
      auto analysis = analyze(load(corpus_flags), options);
      auto records = analysis.records;
      if (!generations_path.empty()) {
        PairOptions base;
        base.co_mode = options.co_mode;
        base.pair_mode = options.pair_mode;
        std::vector<std::string> warnings;
        auto gens = parse_generations(io::read_file(generations_path));
        auto model_records = generation_records(analysis, gens, options.window, base, warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
        records.insert(records.end(), model_records.begin(), model_records.end());
      }
      emit(out_dir, "records.csv", records_to_csv(records));
      std::string jsonl;
      for (const auto& r : records) jsonl += record_to_jsonl(r);
      emit(out_dir, "records.jsonl", jsonl);
    } else if (*aggregate_cmd) {
      auto load_result = load_attributions(attributions_path);
      for (const auto& r : load_result.rejected) {
        std::cerr << "rejected line " << r.line << " (" << r.sample_id << "): " << r.reason << "\n";
      }
      std::vector<AggregatedAttribution> aggregated;
      for (const auto& r : load_result.records) aggregated.push_back(aggregate(r));
      std::vector<RepetitionRecord> records;
      if (!records_path.empty()) records = records_from_csv(io::read_file(records_path));
      auto rows = element_table(aggregated, records, attrib_window);
      emit(out_dir, "attribution_elements.csv", element_rows_to_csv(rows));
      emit(out_dir, "plot_data.json", plot_data_json({}, rows));
    } else if (*join_cmd) {
      auto gens = parse_generations(io::read_file(generations_path));
      KeyedLoad<GenerationKey, ExternalScores> scores;
      KeyedLoad<GroupKey, double> mauve;
      if (!scores_path.empty()) scores = parse_external_scores(io::read_file(scores_path));
      if (!mauve_path.empty()) mauve = parse_mauve(io::read_file(mauve_path));
      auto report = join_scores(gens, scores, mauve);
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
      for (const auto& k : report.unmatched) std::cerr << "unmatched score key: " << k << "\n";
      std::cerr << "score rows " << report.score_rows << ", matched " << report.matched << ", duplicates "
                << report.duplicates << ", unmatched " << report.unmatched.size() << "\n";
      emit(out_dir, "quality.csv", quality_rows_to_csv(report.rows));
      if (!corpus_flags.corpus.empty()) {
        // BLEU per generation group against the human targets.
        auto corpus = load(corpus_flags);
        std::map<std::string, std::string> targets;
        for (const auto& d : corpus.dialogues) {
          for (const auto& s : extract_samples(normalize_turns(d), corpus_flags.window)) {
            targets.emplace(s.sample_id, s.target().text());
          }
        }
        std::map<GroupKey, std::pair<std::vector<std::string>, std::vector<std::string>>> groups;
        for (const auto& g : gens) {
          auto it = targets.find(g.sample_id);
          if (it == targets.end()) continue;
          auto& [refs, hyps] = groups[GroupKey{g.model, g.model_type, g.generation_index}];
          refs.push_back(it->second);
          hyps.push_back(g.text);
        }
        std::string csv = io::csv_row({"model", "model_type", "generation_index", "bleu", "bp", "lr"});
        for (const auto& [key, pair] : groups) {
          auto score = corpus_bleu_text(pair.first, pair.second);
          csv += io::csv_row({key.model, std::string(to_string(key.model_type)), std::to_string(key.generation_index),
                              io::format_double(score.bleu), io::format_double(score.bp), io::format_double(score.lr)});
        }
        emit(out_dir, "bleu.csv", csv);
      }
    } else if (*decay) {
      auto records = records_from_csv(io::read_file(records_path));
      std::string csv;
      auto text = decay_report(records, &csv);
      std::cout << text;
      emit(out_dir, "decay.txt", text);
      emit(out_dir, "decay.csv", csv);
    } else if (*ttest) {
      auto table = io::CsvTable::read(table_path);
      const auto vcol = table.column(column);
      const auto gcol = table.column(group);
      std::map<std::string, std::vector<double>> groups;
      for (const auto& row : table.rows()) {
        if (row[vcol].empty()) continue;
        groups[row[gcol]].push_back(io::parse_double(row[vcol]));
      }
      if (groups.size() != 2) {
        throw DataError("column '" + group + "' must have exactly two levels, found " + std::to_string(groups.size()));
      }
      auto a = groups.begin(), b = std::next(groups.begin());
      auto result = stats::welch_t(a->second, b->second);
      std::cout << "welch t-test of " << column << ": " << a->first << " (mean " << io::format_double(result.mean_a)
                << ") vs " << b->first << " (mean " << io::format_double(result.mean_b) << ")\n"
                << "t = " << io::format_double(result.t) << ", df = " << io::format_double(result.df)
                << ", p = " << io::format_double(result.p) << "\n";
    } else if (*correlate) {
      auto table = io::CsvTable::read(table_path);
      const auto xc = table.column(x_col);
      const auto yc = table.column(y_col);
      std::vector<double> x, y;
      for (const auto& row : table.rows()) {
        if (row[xc].empty() || row[yc].empty()) continue;
        x.push_back(io::parse_double(row[xc]));
        y.push_back(io::parse_double(row[yc]));
      }
      auto result = stats::spearman(x, y);
      std::cout << "spearman rho = " << io::format_double(result.rho) << ", p = " << io::format_double(result.p)
                << ", n = " << result.n << "\n";
    } else if (*synth) {
      spec.seed = seed;
      auto generated = generate_synthetic(spec);
      emit(out_dir, "corpus.jsonl", dialogues_to_jsonl(generated.corpus.dialogues));
      emit(out_dir, "truth.json", synthetic_truth_json(generated.truth));
    } else if (*run) {
      RunConfig config;
      if (!corpus_flags.corpus.empty()) config.corpus_path = corpus_flags.corpus;
      if (synthetic) {
        if (config.corpus_path) throw ConfigError("--synthetic and --corpus are mutually exclusive");
        config.synthetic = spec;
      }
      config.format = parse_corpus_format(corpus_flags.format);
      if (!corpus_flags.pauses.empty()) config.pauses = corpus_flags.pauses;
      config.window = corpus_flags.window;
      config.out_dir = out_dir;
      config.co_mode = parse_co_mode(co_mode);
      config.pair_mode = parse_pair_mode(pair_mode);
      config.seed = seed;
      if (!run_attributions.empty()) config.attributions = run_attributions;
      auto bundle = run_pipeline(config);
      for (const auto& [name, _] : bundle) std::cerr << "wrote " << (fs::path(out_dir) / name).string() << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kInvariant);
  }
  return 0;
}
