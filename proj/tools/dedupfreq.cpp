// Command-line workbench wiring trace generation, defenses, inference
// attacks, and the deduplicating-store simulator into reproducible
// experiments. Every randomized stage derives its seed from the single
// --seed flag by labeled hashing.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dedupfreq/attacks.hpp"
#include "dedupfreq/chunker.hpp"
#include "dedupfreq/defenses.hpp"
#include "dedupfreq/metrics.hpp"
#include "dedupfreq/store.hpp"
#include "dedupfreq/synthetic.hpp"
#include "dedupfreq/trace.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct GenOptions {
  std::string out_dir;
  dedupfreq::SyntheticCorpusParams params;
  std::int64_t added_bytes = -1;  // <0 means scaled default
};

struct DefendOptions {
  std::string manifest;
  std::string out_dir;
  std::string scheme = "minhash+scramble";
  dedupfreq::SegmentParams seg;
  std::uint64_t seed = 1;
};

struct AttackOptions {
  std::string target;
  std::string aux;
  std::string kind = "locality";
  std::string mode = "ciphertext-only";
  std::string ground_truth;
  std::string corpus_manifest;
  std::string report_path;
  std::string summary_path;
  std::string defense_label = "none";
  double leak_rate = 0.0;
  dedupfreq::AttackParams params;
  std::uint64_t seed = 1;
};

struct StoreOptions {
  std::string manifest;
  std::string dir;
  dedupfreq::StoreParams params;
  bool events = false;
};

struct RunAllOptions {
  std::string out_dir;
  std::uint64_t seed = 1;
  dedupfreq::SyntheticCorpusParams corpus;
  double leak_rate = 0.002;
  std::uint64_t small_cache = 64 * 1024;
  std::uint64_t large_cache = 64ull << 20;
};

std::string trace_label(const fs::path& p) { return p.stem().string(); }

void write_corpus(const std::vector<dedupfreq::BackupTrace>& corpus,
                  const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<std::string> entries;
  for (const auto& t : corpus) {
    const auto name = t.label() + ".trace";
    dedupfreq::save_trace(t, dir / name);
    entries.push_back(name);
  }
  dedupfreq::write_manifest(entries, dir / "manifest.txt");
}

int cmd_gen(const GenOptions& opt) {
  auto params = opt.params;
  if (opt.added_bytes >= 0) {
    params.added_bytes_per_snapshot = static_cast<std::uint64_t>(opt.added_bytes);
  }
  const auto corpus = dedupfreq::generate_synthetic(params);
  write_corpus(corpus, opt.out_dir);
  std::uint64_t logical = 0;
  for (const auto& t : corpus) logical += t.total_bytes();
  std::cout << "wrote " << corpus.size() << " snapshots (" << logical
            << " logical bytes) to " << opt.out_dir << "\n";
  return 0;
}

int cmd_chunk(const std::vector<std::string>& inputs,
              const std::string& out_path,
              const dedupfreq::ChunkerParams& params) {
  dedupfreq::BackupTrace trace(trace_label(out_path));
  for (const auto& input : inputs) {
    std::ifstream in(input, std::ios::binary);
    if (!in) throw dedupfreq::IoError("cannot open input file: " + input);
    const auto part = dedupfreq::chunk_stream(in, params);
    for (const auto& c : part) trace.push_back(c);
  }
  dedupfreq::save_trace(trace, out_path);
  std::cout << "chunked " << inputs.size() << " file(s) into " << trace.size()
            << " chunks at " << out_path << "\n";
  return 0;
}

dedupfreq::EncryptionOutput apply_scheme(const std::string& scheme,
                                         const dedupfreq::BackupTrace& trace,
                                         const dedupfreq::SegmentParams& seg,
                                         std::uint64_t seed) {
  if (scheme == "mle") return dedupfreq::mle_encrypt(trace);
  if (scheme == "minhash") return dedupfreq::minhash_encrypt(trace, seg);
  if (scheme == "minhash+scramble") return dedupfreq::defend(trace, seg, seed);
  throw std::invalid_argument("unknown scheme: " + scheme);
}

int cmd_defend(const DefendOptions& opt) {
  const auto paths = dedupfreq::read_manifest(opt.manifest);
  fs::create_directories(opt.out_dir);
  std::vector<std::string> entries;
  for (const auto& path : paths) {
    const auto plain = dedupfreq::load_trace(path);
    const auto seed =
        dedupfreq::derive_seed(opt.seed, "defend:" + plain.label());
    const auto out = apply_scheme(opt.scheme, plain, opt.seg, seed);
    const auto base = fs::path(opt.out_dir) / plain.label();
    dedupfreq::save_trace(out.cipher_trace, base.string() + ".trace");
    {
      std::ofstream gt(base.string() + ".gt");
      dedupfreq::write_ground_truth(out.ground_truth, gt);
    }
    {
      std::ofstream recipe(base.string() + ".recipe");
      dedupfreq::write_recipe(out.file_recipe, recipe);
    }
    if (!out.key_recipe.empty()) {
      std::ofstream keys(base.string() + ".keys");
      for (const auto& k : out.key_recipe) keys << k.hex() << '\n';
    }
    entries.push_back(plain.label() + ".trace");
  }
  dedupfreq::write_manifest(entries, fs::path(opt.out_dir) / "manifest.txt");
  std::cout << "defended " << entries.size() << " backups with " << opt.scheme
            << " into " << opt.out_dir << "\n";
  return 0;
}

// Corpus-level dedup figures for the summary row: brute-force over every
// trace listed in the manifest.
std::pair<double, double> corpus_dedup(const std::string& manifest) {
  std::unordered_map<dedupfreq::Fingerprint, std::uint64_t> uniq;
  std::uint64_t logical = 0;
  for (const auto& path : dedupfreq::read_manifest(manifest)) {
    const auto t = dedupfreq::load_trace(path);
    for (const auto& c : t) {
      logical += c.size;
      uniq.emplace(c.fp, c.size);
    }
  }
  std::uint64_t physical = 0;
  for (const auto& [fp, size] : uniq) physical += size;
  if (physical == 0) return {1.0, 0.0};
  const double ratio =
      static_cast<double>(logical) / static_cast<double>(physical);
  return {ratio, 1.0 - 1.0 / ratio};
}

int cmd_attack(const AttackOptions& opt) {
  const auto target = dedupfreq::load_trace(opt.target);
  const auto aux = dedupfreq::load_trace(opt.aux);

  dedupfreq::GroundTruth gt;
  if (!opt.ground_truth.empty()) {
    std::ifstream in(opt.ground_truth);
    if (!in) {
      throw dedupfreq::IoError("cannot open ground truth: " + opt.ground_truth);
    }
    gt = dedupfreq::read_ground_truth(in);
  }

  auto params = opt.params;
  std::optional<dedupfreq::LeakageSet> leak;
  if (opt.mode == "known-plaintext") {
    params.mode = dedupfreq::AttackMode::kKnownPlaintext;
    if (gt.empty()) {
      throw std::invalid_argument(
          "known-plaintext mode needs --ground-truth to sample leakage");
    }
    leak = dedupfreq::sample_leakage(gt, target, opt.leak_rate,
                                     dedupfreq::derive_seed(opt.seed, "leak"));
  } else if (opt.mode != "ciphertext-only") {
    throw std::invalid_argument("unknown mode: " + opt.mode);
  }

  dedupfreq::AttackResult result;
  if (opt.kind == "basic") {
    result = dedupfreq::basic_attack(target, aux);
  } else if (opt.kind == "locality") {
    result = dedupfreq::locality_attack(target, aux, params,
                                        leak ? &*leak : nullptr);
  } else if (opt.kind == "advanced") {
    result = dedupfreq::advanced_locality_attack(target, aux, params,
                                                 leak ? &*leak : nullptr);
  } else {
    throw std::invalid_argument("unknown attack kind: " + opt.kind);
  }

  json summary;
  summary["attack"] = opt.kind;
  summary["defense"] = opt.defense_label;
  summary["aux"] = aux.label();
  summary["target"] = target.label();
  summary["mode"] = opt.mode;
  summary["u"] = params.init_pairs;
  summary["v"] = params.pairs_per_iter;
  summary["w"] = params.queue_capacity;
  summary["pairs"] = result.pairs.size();
  summary["leakage_rate"] = leak ? leak->leakage_rate : 0.0;
  if (!gt.empty()) {
    summary["inference_rate"] = dedupfreq::inference_rate(result.pairs, gt, target);
  }
  if (!opt.corpus_manifest.empty()) {
    const auto [ratio, saving] = corpus_dedup(opt.corpus_manifest);
    summary["dedup_ratio"] = ratio;
    summary["storage_saving"] = saving;
  }

  if (!opt.report_path.empty()) {
    std::ofstream report(opt.report_path);
    if (!report) {
      throw dedupfreq::IoError("cannot write report: " + opt.report_path);
    }
    dedupfreq::write_attack_report(result, report);
  }
  if (!opt.summary_path.empty()) {
    std::ofstream out(opt.summary_path);
    if (!out) {
      throw dedupfreq::IoError("cannot write summary: " + opt.summary_path);
    }
    out << summary.dump(2) << '\n';
  }
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_store(const StoreOptions& opt) {
  const auto paths = dedupfreq::read_manifest(opt.manifest);
  dedupfreq::DedupStore store(opt.dir, opt.params, opt.events);
  for (const auto& path : paths) {
    store.write_backup(dedupfreq::load_trace(path));
  }
  const auto& report = store.report();
  std::cout << "stored " << paths.size() << " backups: logical="
            << report.logical_bytes << " physical=" << report.physical_bytes
            << " dedup_ratio=" << report.dedup_ratio()
            << " update=" << report.stats.update_bytes
            << " index=" << report.stats.index_bytes
            << " loading=" << report.stats.loading_bytes << "\n";
  return 0;
}

int cmd_compare(const std::vector<std::string>& summaries,
                const std::string& out_path) {
  std::vector<dedupfreq::EvalResult> results;
  for (const auto& path : summaries) {
    std::ifstream in(path);
    if (!in) throw dedupfreq::IoError("cannot open summary: " + path);
    const auto j = json::parse(in);
    dedupfreq::EvalResult r;
    r.attack = j.value("attack", "");
    r.defense = j.value("defense", "");
    r.aux_label = j.value("aux", "");
    r.target_label = j.value("target", "");
    r.inference_rate = j.value("inference_rate", 0.0);
    r.leakage_rate = j.value("leakage_rate", 0.0);
    r.storage_saving = j.value("storage_saving", 0.0);
    r.dedup_ratio = j.value("dedup_ratio", 1.0);
    results.push_back(std::move(r));
  }
  std::ofstream out(out_path);
  if (!out) throw dedupfreq::IoError("cannot write comparison: " + out_path);
  dedupfreq::compare_runs(results, out);
  std::cout << "wrote " << results.size() << " rows to " << out_path << "\n";
  return 0;
}

int cmd_run_all(const RunAllOptions& opt) {
  const fs::path dir(opt.out_dir);
  fs::create_directories(dir / "results");

  auto corpus_params = opt.corpus;
  corpus_params.rng_seed = dedupfreq::derive_seed(opt.seed, "gen");
  const auto corpus = dedupfreq::generate_synthetic(corpus_params);
  write_corpus(corpus, dir / "corpus");

  const auto seg =
      dedupfreq::SegmentParams::for_mean_chunk_size(corpus_params.mean_chunk_size);
  const std::vector<std::string> schemes = {"mle", "minhash",
                                            "minhash+scramble"};
  const auto scheme_dir = [&](const std::string& scheme) {
    return dir / (scheme == "minhash+scramble" ? "combined" : scheme);
  };
  for (const auto& scheme : schemes) {
    DefendOptions d;
    d.manifest = (dir / "corpus" / "manifest.txt").string();
    d.out_dir = scheme_dir(scheme).string();
    d.scheme = scheme;
    d.seg = seg;
    d.seed = dedupfreq::derive_seed(opt.seed, "defend:" + scheme);
    cmd_defend(d);
  }

  const auto& aux_label = corpus[corpus.size() - 2].label();
  const auto& target_label = corpus.back().label();
  std::vector<std::string> summaries;
  const auto attack_cell = [&](const std::string& kind,
                               const std::string& scheme,
                               const std::string& mode) {
    AttackOptions a;
    a.kind = kind;
    a.mode = mode;
    a.defense_label = scheme;
    a.aux = (dir / "corpus" / (aux_label + ".trace")).string();
    const auto sdir = scheme_dir(scheme);
    a.target = (sdir / (target_label + ".trace")).string();
    a.ground_truth = (sdir / (target_label + ".gt")).string();
    a.corpus_manifest = (sdir / "manifest.txt").string();
    a.leak_rate = opt.leak_rate;
    a.seed = dedupfreq::derive_seed(opt.seed, "attack:" + kind + ":" + scheme +
                                                  ":" + mode);
    const auto tag = kind + "_" + (scheme == "minhash+scramble" ? "combined"
                                                                : scheme) +
                     "_" + (mode == "known-plaintext" ? "kp" : "co");
    a.report_path = (dir / "results" / (tag + ".csv")).string();
    a.summary_path = (dir / "results" / (tag + ".json")).string();
    cmd_attack(a);
    summaries.push_back(a.summary_path);
  };

  attack_cell("basic", "mle", "ciphertext-only");
  attack_cell("locality", "mle", "ciphertext-only");
  attack_cell("advanced", "mle", "ciphertext-only");
  for (const auto& scheme : schemes) {
    attack_cell("advanced", scheme, "known-plaintext");
  }

  for (const auto& scheme : {std::string("mle"), std::string("minhash+scramble")}) {
    for (const auto cache : {opt.small_cache, opt.large_cache}) {
      StoreOptions s;
      s.manifest = (scheme_dir(scheme) / "manifest.txt").string();
      const auto tag = (scheme == "mle" ? "mle" : "combined") +
                       std::string(cache == opt.small_cache ? "_small" : "_large");
      s.dir = (dir / ("store_" + tag)).string();
      s.params.cache_capacity = cache;
      s.params.container_size = 4ull << 20;
      s.params.expected_fingerprints =
          std::max<std::uint64_t>(1024, corpus_params.initial_total_size /
                                            corpus_params.mean_chunk_size * 4);
      cmd_store(s);
    }
  }

  cmd_compare(summaries, (dir / "compare.csv").string());
  std::cout << "run-all complete in " << opt.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("frequency-analysis workbench for encrypted deduplication");
  app.set_config("--config", "", "read options from a key=value file");
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic backup corpus");
  gen_cmd->add_option("--out", gen.out_dir, "output directory")->required();
  gen_cmd->add_option("--files", gen.params.initial_file_count,
                      "files in the initial image");
  gen_cmd->add_option("--initial-size", gen.params.initial_total_size,
                      "initial image bytes");
  gen_cmd->add_option("--snapshots", gen.params.snapshots,
                      "snapshot count including the initial one");
  gen_cmd->add_option("--pick-frac", gen.params.file_pick_fraction,
                      "fraction of files modified per snapshot");
  gen_cmd->add_option("--modify-frac", gen.params.content_modify_fraction,
                      "fraction of a picked file's chunks replaced");
  gen_cmd->add_option("--added-bytes", gen.added_bytes,
                      "new-file bytes per snapshot (-1 = scaled default)");
  gen_cmd->add_option("--mean-chunk", gen.params.mean_chunk_size,
                      "mean chunk size in bytes");
  gen_cmd->add_option("--seed", gen.params.rng_seed, "corpus seed");

  std::vector<std::string> chunk_inputs;
  std::string chunk_out;
  dedupfreq::ChunkerParams chunk_params;
  auto* chunk_cmd =
      app.add_subcommand("chunk", "chunk raw files into a backup trace");
  chunk_cmd->add_option("inputs", chunk_inputs, "input files, logical order")
      ->required();
  chunk_cmd->add_option("--out", chunk_out, "output trace path")->required();
  chunk_cmd->add_option("--min", chunk_params.min_size, "minimum chunk size");
  chunk_cmd->add_option("--avg", chunk_params.avg_size, "average chunk size");
  chunk_cmd->add_option("--max", chunk_params.max_size, "maximum chunk size");
  chunk_cmd->add_option("--width", chunk_params.fp_width, "fingerprint bytes");

  DefendOptions defend;
  auto* defend_cmd =
      app.add_subcommand("defend", "encrypt a plaintext corpus");
  defend_cmd->add_option("--manifest", defend.manifest, "plaintext manifest")
      ->required();
  defend_cmd->add_option("--out", defend.out_dir, "output directory")
      ->required();
  defend_cmd
      ->add_option("--scheme", defend.scheme,
                   "mle | minhash | minhash+scramble")
      ->check(CLI::IsMember({"mle", "minhash", "minhash+scramble"}));
  defend_cmd->add_option("--seg-min", defend.seg.min_bytes, "segment minimum");
  defend_cmd->add_option("--seg-avg", defend.seg.avg_bytes, "segment average");
  defend_cmd->add_option("--seg-max", defend.seg.max_bytes, "segment maximum");
  defend_cmd->add_option("--divisor", defend.seg.divisor,
                         "segment boundary divisor");
  defend_cmd->add_option("--seed", defend.seed, "root seed");

  AttackOptions attack;
  auto* attack_cmd = app.add_subcommand("attack", "run an inference attack");
  attack_cmd->add_option("--target", attack.target, "target cipher trace")
      ->required();
  attack_cmd->add_option("--aux", attack.aux, "auxiliary plaintext trace")
      ->required();
  attack_cmd->add_option("--kind", attack.kind, "basic | locality | advanced")
      ->check(CLI::IsMember({"basic", "locality", "advanced"}));
  attack_cmd
      ->add_option("--mode", attack.mode,
                   "ciphertext-only | known-plaintext")
      ->check(CLI::IsMember({"ciphertext-only", "known-plaintext"}));
  attack_cmd->add_option("--leak", attack.leak_rate,
                         "leakage rate for known-plaintext mode");
  attack_cmd->add_option("--ground-truth", attack.ground_truth,
                         "cipher,plain map for rates and leakage");
  attack_cmd->add_option("--corpus-manifest", attack.corpus_manifest,
                         "cipher corpus manifest for dedup figures");
  attack_cmd->add_option("-u", attack.params.init_pairs, "seed pairs");
  attack_cmd->add_option("-v", attack.params.pairs_per_iter,
                         "pairs per iteration");
  attack_cmd->add_option("-w", attack.params.queue_capacity,
                         "inferred queue bound");
  attack_cmd->add_option("--block", attack.params.block_size,
                         "cipher block size for size classes");
  attack_cmd->add_option("--report", attack.report_path, "pair CSV path");
  attack_cmd->add_option("--summary", attack.summary_path, "summary path");
  attack_cmd->add_option("--defense", attack.defense_label,
                         "defense label for the summary row");
  attack_cmd->add_option("--seed", attack.seed, "root seed");

  StoreOptions store;
  auto* store_cmd =
      app.add_subcommand("store", "replay a cipher corpus through the store");
  store_cmd->add_option("--manifest", store.manifest, "cipher manifest")
      ->required();
  store_cmd->add_option("--dir", store.dir, "store directory")->required();
  store_cmd->add_option("--cache-bytes", store.params.cache_capacity,
                        "fingerprint cache capacity in bytes");
  store_cmd->add_option("--container-bytes", store.params.container_size,
                        "container size in bytes");
  store_cmd->add_option("--bloom-fpr", store.params.bloom_fp_rate,
                        "Bloom filter false-positive rate");
  store_cmd->add_option("--bloom-hashes", store.params.bloom_hashes,
                        "Bloom filter hash count");
  store_cmd->add_option("--fp-meta", store.params.fp_metadata_size,
                        "per-fingerprint metadata bytes");
  store_cmd->add_option("--expected-fps", store.params.expected_fingerprints,
                        "expected fingerprints for Bloom sizing");
  store_cmd->add_flag("--events", store.events, "write events.log");

  std::vector<std::string> compare_inputs;
  std::string compare_out;
  auto* compare_cmd =
      app.add_subcommand("compare", "merge attack summaries into one CSV");
  compare_cmd->add_option("summaries", compare_inputs, "summary JSON files")
      ->required();
  compare_cmd->add_option("--out", compare_out, "output CSV")->required();

  RunAllOptions run_all;
  run_all.corpus.initial_file_count = 200;
  run_all.corpus.initial_total_size = 16ull << 20;
  run_all.corpus.snapshots = 11;
  auto* run_cmd = app.add_subcommand(
      "run-all", "gen + defend + attack + store + compare pipeline");
  run_cmd->fallthrough(true);
  run_cmd->option_defaults()->always_capture_default(true);
  run_cmd->add_option("--out", run_all.out_dir, "output directory")->required();
  run_cmd->add_option("--seed", run_all.seed, "root seed");
  run_cmd->add_option("--files", run_all.corpus.initial_file_count,
                      "files in the initial image");
  run_cmd->add_option("--initial-size", run_all.corpus.initial_total_size,
                      "initial image bytes");
  run_cmd->add_option("--snapshots", run_all.corpus.snapshots,
                      "snapshot count");
  run_cmd->add_option("--mean-chunk", run_all.corpus.mean_chunk_size,
                      "mean chunk size");
  run_cmd->add_option("--leak", run_all.leak_rate,
                      "leakage rate for known-plaintext cells");
  run_cmd->add_option("--small-cache", run_all.small_cache,
                      "small fingerprint cache bytes");
  run_cmd->add_option("--large-cache", run_all.large_cache,
                      "large fingerprint cache bytes");
  bool dump_config = false;
  run_cmd->add_flag("--dump-config", dump_config,
                    "print the effective configuration and exit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(gen_cmd)) return cmd_gen(gen);
    if (app.got_subcommand(chunk_cmd)) {
      return cmd_chunk(chunk_inputs, chunk_out, chunk_params);
    }
    if (app.got_subcommand(defend_cmd)) return cmd_defend(defend);
    if (app.got_subcommand(attack_cmd)) return cmd_attack(attack);
    if (app.got_subcommand(store_cmd)) return cmd_store(store);
    if (app.got_subcommand(compare_cmd)) {
      return cmd_compare(compare_inputs, compare_out);
    }
    if (app.got_subcommand(run_cmd)) {
      if (dump_config) {
        std::cout << app.config_to_str(false, false);
        return 0;
      }
      return cmd_run_all(run_all);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
