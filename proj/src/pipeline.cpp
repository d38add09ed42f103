#include "entrain/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>

#include "entrain/error.hpp"
#include "entrain/io.hpp"

namespace entrain {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

Analysis analyze(Corpus corpus, const AnalysisOptions& options) {
  if (options.window < 2) throw ConfigError("window must be at least 2, got " + std::to_string(options.window));
  Analysis a;
  a.corpus.name = std::move(corpus.name);
  a.corpus.filled_pauses = std::move(corpus.filled_pauses);
  a.corpus.dialogues.reserve(corpus.dialogues.size());
  for (auto& d : corpus.dialogues) a.corpus.dialogues.push_back(normalize_turns(std::move(d)));

  std::vector<DialogueVocabulary> vocabularies;
  vocabularies.reserve(a.corpus.dialogues.size());
  a.lexica.reserve(a.corpus.dialogues.size());
  for (const auto& d : a.corpus.dialogues) {
    vocabularies.push_back(index_vocabulary(d));
    a.lexica.push_back(build_lexicon(d, vocabularies.back(), a.corpus.filled_pauses));
  }
  if (options.construction_stats && !options.pmi) throw ConfigError("construction statistics need PMI counts");
  if (options.pmi) a.counts = count_lexicon_sequences(a.corpus.dialogues, a.lexica);

  PairOptions pair_options;
  pair_options.co_mode = options.co_mode;
  pair_options.pair_mode = options.pair_mode;
  pair_options.shared_tokens = options.shared_tokens;
  pair_options.pmi = options.pmi;
  for (std::size_t i = 0; i < a.corpus.dialogues.size(); ++i) {
    const auto& d = a.corpus.dialogues[i];
    auto records = dialogue_pair_records(d, vocabularies[i], options.window, a.lexica[i], a.counts, pair_options);
    a.records.insert(a.records.end(), std::make_move_iterator(records.begin()), std::make_move_iterator(records.end()));
    for (std::size_t start = 0; start + options.window <= d.utterances.size(); ++start) {
      const auto sample_id = d.dialogue_id + ":" + std::to_string(start);
      const auto& target = d.utterances[start + options.window - 1];
      a.samples.push_back({sample_id, d.dialogue_id, start, target.speaker});
      if (options.construction_stats) {
        Scope scope;
        scope.first = start;
        scope.last = start + options.window;
        for (std::size_t k = start; k < scope.last; ++k) scope.utterances.push_back(&d.utterances[k]);
        for (auto& s : construction_stats(a.lexica[i], scope, a.counts)) {
          a.construction_stats.push_back({sample_id, std::move(s)});
        }
      }
    }
  }
  return a;
}

void validate(const RunConfig& config) {
  if (config.window < 2) throw ConfigError("window must be at least 2, got " + std::to_string(config.window));
  if (!config.corpus_path && !config.synthetic) throw ConfigError("either a corpus or a synthetic spec is required");
  if (config.corpus_path && !fs::exists(*config.corpus_path)) {
    throw ConfigError("corpus file not found: " + config.corpus_path->string());
  }
  if (config.attributions && !fs::exists(*config.attributions)) {
    throw ConfigError("attribution file not found: " + config.attributions->string());
  }
  if (config.out_dir.empty()) throw ConfigError("an output directory is required");
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec || !fs::is_directory(config.out_dir)) {
    throw ConfigError("output directory not writable: " + config.out_dir.string());
  }
  auto probe = config.out_dir / ".write-probe";
  {
    std::ofstream out(probe);
    if (!out) throw ConfigError("output directory not writable: " + config.out_dir.string());
  }
  fs::remove(probe, ec);
}

namespace {

template <typename Stage>
auto run_stage(const char* name, Stage&& stage) {
  try {
    return stage();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage '") + name + "' failed: " + e.what());
  } catch (const std::exception& e) {
    throw InvariantError(std::string("stage '") + name + "' failed: " + e.what());
  }
}

struct Summary {
  double mean = 0.0, sd = 0.0, median = 0.0, max = 0.0;
  std::size_t n = 0;
};

Summary summarize(std::vector<double> values) {
  Summary s;
  s.n = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  s.mean = total / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
  const auto mid = values.size() / 2;
  s.median = values.size() % 2 ? values[mid] : (values[mid - 1] + values[mid]) / 2.0;
  s.max = values.back();
  return s;
}

ordered_json to_json(const Summary& s) {
  ordered_json j;
  j["n"] = s.n;
  j["mean"] = s.mean;
  j["sd"] = s.sd;
  j["median"] = s.median;
  j["max"] = s.max;
  return j;
}

}  // namespace

std::string samples_to_csv(const std::vector<SampleSummary>& samples) {
  std::string out = io::csv_row({"sample_id", "dialogue_id", "start", "target_speaker"});
  for (const auto& s : samples) out += io::csv_row({s.sample_id, s.dialogue_id, std::to_string(s.start), s.target_speaker});
  return out;
}

std::string samples_to_jsonl(const std::vector<ContextSample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    ordered_json j;
    j["sample_id"] = s.sample_id;
    j["dialogue_id"] = s.dialogue_id;
    j["start"] = s.start;
    j["target_speaker"] = s.target_speaker;
    auto context = ordered_json::array();
    for (std::size_t i = 0; i + 1 < s.utterances.size(); ++i) {
      context.push_back({{"speaker", s.utterances[i].speaker}, {"text", s.utterances[i].text()}});
    }
    j["context"] = std::move(context);
    j["target"] = {{"speaker", s.target().speaker}, {"text", s.target().text()}};
    out += j.dump() + "\n";
  }
  return out;
}

std::string lexicon_to_jsonl(const ConstructionLexicon& lexicon) {
  std::string out;
  for (const auto& entry : lexicon.entries()) {
    ordered_json j;
    j["dialogue_id"] = lexicon.dialogue_id();
    j["tokens"] = entry.tokens;
    j["maximal"] = entry.is_maximal;
    auto occurrences = ordered_json::array();
    for (const auto& occ : entry.occurrences) {
      ordered_json o;
      o["u"] = occ.utterance_index;
      o["o"] = occ.token_offset;
      o["speaker"] = occ.speaker;
      occurrences.push_back(std::move(o));
    }
    j["occurrences"] = std::move(occurrences);
    out += j.dump() + "\n";
  }
  return out;
}

std::string construction_stats_to_csv(const std::vector<ScopedStats>& rows) {
  std::string out =
      io::csv_row({"scope_id", "construction", "length", "frequency", "rep_distance", "incidence", "pmi"});
  for (const auto& [scope, s] : rows) {
    std::string text;
    for (const auto& t : s.tokens) text += (text.empty() ? "" : " ") + t;
    out += io::csv_row({scope, text, std::to_string(s.length), std::to_string(s.frequency),
                        io::format_optional(s.rep_distance), std::to_string(s.incidence), io::format_double(s.pmi)});
  }
  return out;
}

std::string dialogues_to_jsonl(const std::vector<Dialogue>& dialogues) {
  std::string out;
  for (const auto& d : dialogues) {
    ordered_json j;
    j["dialogue_id"] = d.dialogue_id;
    auto turns = ordered_json::array();
    for (const auto& u : d.utterances) {
      ordered_json t;
      t["speaker"] = u.speaker;
      t["text"] = u.text();
      turns.push_back(std::move(t));
    }
    j["turns"] = std::move(turns);
    out += j.dump() + "\n";
  }
  return out;
}

std::string corpus_summary_json(const Corpus& corpus, std::size_t window) {
  std::vector<double> utterances, words;
  std::set<std::string> vocabulary;
  std::size_t samples = 0;
  for (const auto& raw : corpus.dialogues) {
    auto d = normalize_turns(raw);
    utterances.push_back(static_cast<double>(d.utterances.size()));
    if (d.utterances.size() >= window) samples += d.utterances.size() - window + 1;
    for (const auto& u : d.utterances) {
      words.push_back(static_cast<double>(u.word_count()));
      for (const auto& t : u.tokens) {
        if (!t.is_punct) vocabulary.insert(t.norm);
      }
    }
  }
  ordered_json j;
  j["corpus"] = corpus.name;
  j["dialogues"] = corpus.dialogues.size();
  j["utterances_per_dialogue"] = to_json(summarize(utterances));
  j["unique_vocabulary"] = vocabulary.size();
  j["window"] = window;
  j["samples"] = samples;
  j["words_per_utterance"] = to_json(summarize(words));
  return j.dump(2) + "\n";
}

std::string synthetic_truth_json(const SyntheticTruth& truth) {
  ordered_json j;
  const auto& s = truth.spec;
  j["n_dialogues"] = s.n_dialogues;
  j["utterances_per_dialogue"] = s.utterances_per_dialogue;
  j["vocab_size"] = s.vocab_size;
  j["construction_length"] = s.construction_length;
  j["words_per_utterance"] = truth.words_per_utterance;
  j["types_per_construction"] = truth.types_per_construction;
  j["co_per_planting"] = truth.co_per_planting;
  j["between_intercept"] = s.between_intercept;
  j["between_slope"] = s.between_slope;
  j["within_intercept"] = s.within_intercept;
  j["within_slope"] = s.within_slope;
  j["noise_sigma"] = s.noise_sigma;
  j["seed"] = s.seed;
  return j.dump(2) + "\n";
}

std::string plot_data_json(const std::vector<RepetitionRecord>& records, const std::vector<ElementRow>& elements) {
  // measure -> relation -> distance -> (sum, count)
  std::map<std::string, std::map<std::string, std::map<std::size_t, std::pair<double, std::size_t>>>> acc;
  for (const auto& r : records) {
    const std::string rel(to_string(r.speaker_relation));
    const std::string producer = r.producer == "human" ? "human" : r.producer + "/" + std::string(to_string(r.model_type));
    auto add = [&](const std::string& measure, double v) {
      auto& cell = acc[producer + ":" + measure][rel][r.distance];
      cell.first += v;
      ++cell.second;
    };
    add("co", r.co);
    add("vo", r.vo);
    if (r.pmi_avg) add("pmi", *r.pmi_avg);
  }
  for (const auto& e : elements) {
    if (!e.distance || !e.speaker_relation) continue;
    const std::string series = e.model + "/" + std::string(to_string(e.model_type)) + ":phi_" +
                               std::string(to_string(e.kind));
    auto& cell = acc[series][std::string(to_string(*e.speaker_relation))][*e.distance];
    cell.first += e.phi;
    ++cell.second;
  }
  ordered_json j;
  j["x_label"] = "distance";
  auto series = ordered_json::object();
  for (const auto& [name, relations] : acc) {
    auto per_relation = ordered_json::object();
    for (const auto& [rel, cells] : relations) {
      ordered_json s;
      auto x = ordered_json::array(), y = ordered_json::array(), n = ordered_json::array();
      for (const auto& [d, cell] : cells) {
        x.push_back(d);
        y.push_back(cell.first / static_cast<double>(cell.second));
        n.push_back(cell.second);
      }
      s["x"] = std::move(x);
      s["y"] = std::move(y);
      s["n"] = std::move(n);
      per_relation[rel] = std::move(s);
    }
    series[name] = std::move(per_relation);
  }
  j["series"] = std::move(series);
  return j.dump(2) + "\n";
}

std::string decay_report(const std::vector<RepetitionRecord>& records, std::string* csv_out) {
  std::string text;
  std::string csv = io::csv_row({"measure", "term", "Coef.", "Std.", "z", "P>|z|", "[0.025", "0.975]"});
  for (auto measure : {stats::Measure::kCo, stats::Measure::kVo}) {
    const std::string name(stats::to_string(measure));
    try {
      auto result = stats::decay_slope(records, measure);
      text += stats::regression_table(result, "Decay of " + name + " with distance by speaker relation") + "\n";
      for (const auto& c : result.coefficients) {
        csv += io::csv_row({name, c.name, io::format_double(c.coef), io::format_double(c.std_err),
                            io::format_double(c.z), io::format_double(c.p), io::format_double(c.ci_low),
                            io::format_double(c.ci_high)});
      }
    } catch (const DataError& e) {
      text += "Decay of " + name + ": not estimable: " + e.what() + "\n\n";
    }
  }
  if (csv_out) *csv_out = std::move(csv);
  return text;
}

void write_bundle(const Bundle& bundle, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  for (const auto& [name, content] : bundle) io::write_file(out_dir / name, content);
}

Bundle run_pipeline(const RunConfig& config) {
  validate(config);
  Bundle bundle;

  Corpus corpus = run_stage("ingest", [&] {
    if (config.corpus_path) {
      LoadOptions load;
      if (config.pauses) load.pauses = resolve_pauses(*config.pauses);
      return load_corpus(*config.corpus_path, config.format, load);
    }
    auto spec = *config.synthetic;
    spec.seed = config.seed;
    auto synthetic = generate_synthetic(spec);
    bundle["truth.json"] = synthetic_truth_json(synthetic.truth);
    if (config.pauses) synthetic.corpus.filled_pauses = resolve_pauses(*config.pauses);
    return std::move(synthetic.corpus);
  });

  AnalysisOptions options;
  options.window = config.window;
  options.co_mode = config.co_mode;
  options.pair_mode = config.pair_mode;
  Analysis analysis = run_stage("analyze", [&] { return analyze(std::move(corpus), options); });

  bundle["corpus_summary.json"] = corpus_summary_json(analysis.corpus, config.window);
  bundle["samples.csv"] = samples_to_csv(analysis.samples);
  {
    std::string lexicon;
    for (const auto& l : analysis.lexica) lexicon += lexicon_to_jsonl(l);
    bundle["lexicon.jsonl"] = std::move(lexicon);
  }
  bundle["construction_stats.csv"] = construction_stats_to_csv(analysis.construction_stats);
  bundle["records.csv"] = records_to_csv(analysis.records);
  {
    std::string jsonl;
    for (const auto& r : analysis.records) jsonl += record_to_jsonl(r);
    bundle["records.jsonl"] = std::move(jsonl);
  }

  run_stage("stats", [&] {
    std::string csv;
    bundle["decay.txt"] = decay_report(analysis.records, &csv);
    bundle["decay.csv"] = std::move(csv);

    std::vector<double> lengths, freqs, dists, incidences, pmis, cos, vos;
    for (const auto& [_, s] : analysis.construction_stats) {
      lengths.push_back(static_cast<double>(s.length));
      freqs.push_back(static_cast<double>(s.frequency));
      if (s.rep_distance) dists.push_back(*s.rep_distance);
      incidences.push_back(static_cast<double>(s.incidence));
      pmis.push_back(s.pmi);
    }
    for (const auto& r : analysis.records) {
      cos.push_back(r.co);
      vos.push_back(r.vo);
    }
    ordered_json j;
    j["model"] = "statistics are descriptive; regressions are OLS without random effects";
    j["construction"]["length"] = to_json(summarize(lengths));
    j["construction"]["frequency"] = to_json(summarize(freqs));
    j["construction"]["rep_distance"] = to_json(summarize(dists));
    j["construction"]["incidence"] = to_json(summarize(incidences));
    j["construction"]["pmi"] = to_json(summarize(pmis));
    j["utterance"]["co"] = to_json(summarize(cos));
    j["utterance"]["vo"] = to_json(summarize(vos));
    bundle["construction_summary.json"] = j.dump(2) + "\n";
    return 0;
  });

  std::vector<ElementRow> elements;
  if (config.attributions) {
    run_stage("attribution", [&] {
      auto load = load_attributions(*config.attributions);
      std::vector<AggregatedAttribution> aggregated;
      for (const auto& r : load.records) aggregated.push_back(aggregate(r));
      std::sort(aggregated.begin(), aggregated.end(), [](const auto& a, const auto& b) {
        return std::tie(a.sample_id, a.model, a.model_type) < std::tie(b.sample_id, b.model, b.model_type);
      });
      elements = element_table(aggregated, analysis.records, config.window);
      bundle["attribution_elements.csv"] = element_rows_to_csv(elements);
      std::string rejected;
      for (const auto& r : load.rejected) {
        rejected += "line " + std::to_string(r.line) + ": " + r.reason + "\n";
      }
      bundle["attribution_rejections.txt"] = std::move(rejected);
      return 0;
    });
  }
  bundle["plot_data.json"] = plot_data_json(analysis.records, elements);

  run_stage("write", [&] {
    write_bundle(bundle, config.out_dir);
    return 0;
  });
  return bundle;
}

}  // namespace entrain
