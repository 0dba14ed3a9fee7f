#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "transcad/chamfer.hpp"
#include "transcad/errors.hpp"
#include "transcad/generator.hpp"
#include "transcad/metrics.hpp"
#include "transcad/perturb.hpp"
#include "transcad/point_cloud.hpp"
#include "transcad/serialize.hpp"
#include "transcad/surface_sampler.hpp"

namespace transcad {

namespace fs = std::filesystem;

inline std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Resolved-config echo written alongside every command's outputs; the digest
// doubles as a cheap reproducibility fingerprint.
inline std::string emit_run_config(const std::string& out_dir, const std::string& command,
                                   Json config) {
  Json echo;
  echo["command"] = command;
  echo["config"] = std::move(config);
  const std::string digest = hex64(fnv1a64(echo.dump()));
  echo["echo_hash"] = digest;
  fs::create_directories(out_dir);
  std::ofstream out((fs::path(out_dir) / "run_config.json").string(), std::ios::binary);
  if (!out) throw Error("cannot write run config in " + out_dir);
  out << echo.dump(2) << "\n";
  return digest;
}

// Runs fn(i) for i in [0, n) across `jobs` threads; results must be written
// into pre-sized slots so the merge stays deterministic.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const int workers = std::min<int>(jobs, static_cast<int>(n));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) break;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Dataset manifest

struct ManifestItem {
  std::string id;
  std::string sequence;  // path relative to the manifest directory
  std::string cloud;
};

struct Manifest {
  std::vector<ManifestItem> items;
  std::map<std::string, std::vector<std::string>> splits;
  Json config;
  std::string digest;

  Json to_json() const {
    Json j;
    Json items_json = Json::array();
    for (const auto& it : items)
      items_json.push_back({{"id", it.id}, {"sequence", it.sequence}, {"cloud", it.cloud}});
    j["items"] = std::move(items_json);
    j["splits"] = splits;
    j["config"] = config;
    return j;
  }
};

inline void save_manifest(Manifest& manifest, const std::string& path) {
  Json j = manifest.to_json();
  manifest.digest = hex64(fnv1a64(j.dump()));
  j["digest"] = manifest.digest;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

inline Manifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  Manifest m;
  for (const auto& it : j.at("items"))
    m.items.push_back({it.at("id").get<std::string>(), it.at("sequence").get<std::string>(),
                       it.at("cloud").get<std::string>()});
  if (j.contains("splits"))
    m.splits = j.at("splits").get<std::map<std::string, std::vector<std::string>>>();
  m.config = j.value("config", Json::object());
  m.digest = j.value("digest", std::string());
  return m;
}

struct SynthOptions {
  int count = 10;
  std::uint64_t seed = 0;
  std::string out_dir;
  int points = 512;
  double train_frac = 0.8;
  double val_frac = 0.1;
  int jobs = 1;
  GeneratorSpec generator;
};

inline std::string make_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "model_%04d", index);
  return buf;
}

// count valid (sequence, cloud) pairs + manifest with train/val/test splits.
// Sequence seeds that fail geometric sampling (empty CSG results) are
// skipped deterministically.
inline Manifest cmd_synth(const SynthOptions& opt) {
  fs::create_directories(opt.out_dir);
  Manifest manifest;
  manifest.config = {{"count", opt.count},
                     {"seed", opt.seed},
                     {"points", opt.points},
                     {"train_frac", opt.train_frac},
                     {"val_frac", opt.val_frac}};

  struct Made {
    CadSequence seq;
    PointCloud cloud;
  };
  std::vector<Made> made(static_cast<std::size_t>(opt.count));
  std::vector<std::string> errors(static_cast<std::size_t>(opt.count));
  parallel_for(static_cast<std::size_t>(opt.count), opt.jobs, [&](std::size_t i) {
    // bounded inner retries over derived sub-seeds for unsampleable solids
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (attempt >= 100) {
        errors[i] = "no sampleable sequence for item " + std::to_string(i);
        return;
      }
      const std::uint64_t item_seed = derive_seed(opt.seed, i * 1000 + attempt);
      try {
        CadSequence seq = generate_random_sequence(item_seed, opt.generator);
        PointCloud cloud = sample_surface(seq, opt.points, derive_seed(item_seed, 0xc10dULL));
        made[i] = {std::move(seq), std::move(cloud)};
        return;
      } catch (const EmptySolidError&) {
        continue;
      }
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw Error("cmd_synth: " + e);

  for (int i = 0; i < opt.count; ++i) {
    const std::string id = make_id(i);
    const std::string seq_file = id + ".json";
    const std::string ply_file = id + ".ply";
    save_sequence(made[static_cast<std::size_t>(i)].seq, (fs::path(opt.out_dir) / seq_file).string());
    save_ply(made[static_cast<std::size_t>(i)].cloud, (fs::path(opt.out_dir) / ply_file).string());
    manifest.items.push_back({id, seq_file, ply_file});
  }

  // split by seeded shuffle
  std::vector<std::string> ids;
  for (const auto& it : manifest.items) ids.push_back(it.id);
  Rng rng(derive_seed(opt.seed, 0x5011ULL));
  rng.shuffle(ids);
  const int n_train = static_cast<int>(std::round(opt.train_frac * opt.count));
  const int n_val = static_cast<int>(std::round(opt.val_frac * opt.count));
  for (int i = 0; i < opt.count; ++i) {
    const std::string split = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
    manifest.splits[split].push_back(ids[static_cast<std::size_t>(i)]);
  }
  for (auto& [name, list] : manifest.splits) std::sort(list.begin(), list.end());

  save_manifest(manifest, (fs::path(opt.out_dir) / "manifest.json").string());
  return manifest;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalOptions {
  std::string pred_dir;
  std::string gt_dir;
  ScoringConfig scoring;
  std::uint64_t seed = 0;
  int cd_points = 4096;
  int complexity_bins = 0;
  std::string train_dir;  // required when complexity_bins > 0
  int jobs = 1;
};

inline std::vector<std::string> list_ids(const std::string& dir, const std::string& ext) {
  std::vector<std::string> ids;
  if (!fs::is_directory(dir)) throw Error("not a directory: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ext) continue;
    const std::string stem = entry.path().stem().string();
    // skip bookkeeping files living next to the data
    if (stem == "manifest" || stem == "run_config" || stem.ends_with(".removed")) continue;
    ids.push_back(stem);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

struct EvalOutput {
  std::vector<EvalRow> rows;
  EvalSummary summary;
};

inline EvalOutput run_eval(const EvalOptions& opt) {
  const auto gt_ids = list_ids(opt.gt_dir, ".json");
  const auto pred_ids = list_ids(opt.pred_dir, ".json");
  if (gt_ids.empty()) throw EmptyEvaluationError("run_eval: no ground-truth sequences in " + opt.gt_dir);

  // exhaustive id matching before any work
  std::vector<std::string> missing;
  for (const auto& id : gt_ids)
    if (!std::binary_search(pred_ids.begin(), pred_ids.end(), id)) missing.push_back(id);
  if (!missing.empty()) {
    std::string msg = "run_eval: missing prediction files for ids:";
    for (const auto& id : missing) msg += " " + id;
    throw Error(msg);
  }

  std::vector<PointCloud> train_clouds;
  if (opt.complexity_bins > 0) {
    if (opt.train_dir.empty()) throw Error("run_eval: complexity bins need a train dir");
    for (const auto& id : list_ids(opt.train_dir, ".ply"))
      train_clouds.push_back(load_ply((fs::path(opt.train_dir) / (id + ".ply")).string()));
    if (train_clouds.empty()) throw Error("run_eval: no train clouds in " + opt.train_dir);
  }

  EvalOutput out;
  out.rows.resize(gt_ids.size());
  parallel_for(gt_ids.size(), opt.jobs, [&](std::size_t i) {
    const std::string& id = gt_ids[i];
    EvalRow row;
    row.id = id;
    const CadSequence gt = load_sequence((fs::path(opt.gt_dir) / (id + ".json")).string());

    CadSequence pred;
    bool parseable = true;
    try {
      pred = load_sequence((fs::path(opt.pred_dir) / (id + ".json")).string());
    } catch (const ParseError&) {
      parseable = false;
    }

    const auto gt_tokens = tokenize(gt, kLMax);
    if (parseable) {
      const auto breakdown = csss(pred, gt, opt.scoring);
      row.csss = breakdown.total;
      row.apcs = apcs_from_csss(breakdown.total, opt.scoring);
      row.acc_cmd = transcad::acc_cmd(pred, gt);
      row.acc_param = transcad::acc_param(pred, gt, opt.scoring);
      std::vector<TokenType> pred_tokens;
      try {
        pred_tokens = tokenize(pred, kLMax);
      } catch (const TokenOverflowError&) {
        pred_tokens.assign(static_cast<std::size_t>(kLMax), TokenType::Loop);  // overflow: worst case
      }
      row.f1 = f1_token_types(pred_tokens, gt_tokens);
      row.valid = validate(pred).valid;
    } else {
      // unparseable prediction: scored zero and counted invalid
      row.valid = false;
      row.apcs = 0.0;
      row.csss = 0.0;
    }

    const std::uint64_t id_seed = derive_seed(opt.seed, fnv1a64(id));
    PointCloud gt_cloud;
    try {
      gt_cloud = sample_surface(gt, opt.cd_points, derive_seed(id_seed, 1));
    } catch (const EmptySolidError&) {
    }
    if (row.valid && !gt_cloud.empty()) {
      try {
        const PointCloud pred_cloud = sample_surface(pred, opt.cd_points, derive_seed(id_seed, 2));
        row.cd_reported = chamfer_distance(pred_cloud, gt_cloud) * kCdReportScale;
      } catch (const EmptySolidError&) {
        row.valid = false;  // syntactically fine but not reconstructable
      }
    }
    if (!train_clouds.empty() && !gt_cloud.empty()) {
      row.complexity_reported =
          model_complexity(gt_cloud, train_clouds) * kCdReportScale;
    }
    out.rows[i] = std::move(row);
  });

  out.summary = aggregate_report(out.rows, opt.complexity_bins);
  return out;
}

inline void write_eval_csv(const std::vector<EvalRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "id,apcs,csss,cd_x1000,valid,acc_cmd,acc_param,f1,complexity,bin\n";
  char buf[512];
  for (const auto& r : rows) {
    std::string cd = r.cd_reported ? [&] {
      char b[64];
      std::snprintf(b, sizeof b, "%.9g", *r.cd_reported);
      return std::string(b);
    }()
                                   : std::string();
    std::string cx = r.complexity_reported ? [&] {
      char b[64];
      std::snprintf(b, sizeof b, "%.9g", *r.complexity_reported);
      return std::string(b);
    }()
                                           : std::string();
    std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g,%s,%d,%.9g,%.9g,%.9g,%s,%d\n", r.id.c_str(),
                  r.apcs, r.csss, cd.c_str(), r.valid ? 1 : 0, r.acc_cmd, r.acc_param, r.f1,
                  cx.c_str(), r.bin);
    out << buf;
  }
}

inline Json summary_to_json(const EvalSummary& s, const ScoringConfig& scoring,
                            std::uint64_t seed) {
  Json j;
  j["mean_apcs"] = s.mean_apcs;
  j["median_cd_x1000"] = s.median_cd_reported;
  j["invalidity_ratio"] = s.invalidity_ratio;
  j["macro_f1"] = s.macro_f1;
  j["total"] = s.total;
  j["valid"] = s.valid_count;
  Json bins = Json::array();
  for (const auto& b : s.bins)
    bins.push_back({{"bin", b.index},
                    {"count", b.count},
                    {"mean_apcs", b.mean_apcs},
                    {"median_cd_x1000", b.median_cd_reported},
                    {"max_complexity", b.max_complexity}});
  j["bins"] = std::move(bins);
  // config echo for reproducibility
  j["config"] = {{"k", scoring.k},
                 {"eta", scoring.eta},
                 {"thresholds", scoring.thresholds},
                 {"seed", seed}};
  j["echo_hash"] = hex64(fnv1a64(j["config"].dump()));
  return j;
}

// ---------------------------------------------------------------------------
// Perturbation over a directory of clouds

struct PerturbOptions {
  std::string in_dir;
  std::string out_dir;
  std::string mode = "noise";  // noise | holes
  NoiseSpec noise;
  HoleSpec holes;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct PerturbSummary {
  std::vector<std::string> processed;
  std::vector<std::string> skipped;  // too small for hole punching
};

inline PerturbSummary cmd_perturb(const PerturbOptions& opt) {
  const auto ids = list_ids(opt.in_dir, ".ply");
  if (ids.empty()) throw Error("cmd_perturb: no .ply inputs in " + opt.in_dir);
  fs::create_directories(opt.out_dir);
  Json echo{{"in", opt.in_dir}, {"mode", opt.mode}, {"seed", opt.seed}, {"jobs", opt.jobs}};
  if (opt.mode == "noise") {
    echo["amplitude"] = opt.noise.amplitude;
    echo["octaves"] = opt.noise.octaves;
  } else {
    echo["max_holes"] = opt.holes.max_holes;
    echo["ratio_mean"] = opt.holes.ratio_mean;
    echo["ratio_std"] = opt.holes.ratio_std;
    echo["min_remaining"] = opt.holes.min_remaining;
  }
  emit_run_config(opt.out_dir, "perturb", echo);
  PerturbSummary summary;
  std::vector<int> status(ids.size(), 0);
  parallel_for(ids.size(), opt.jobs, [&](std::size_t i) {
    const std::string in_path = (fs::path(opt.in_dir) / (ids[i] + ".ply")).string();
    const std::string out_path = (fs::path(opt.out_dir) / (ids[i] + ".ply")).string();
    const PointCloud cloud = load_ply(in_path);
    // per-file seed derivation keeps file-level parallelism deterministic
    const std::uint64_t file_seed = opt.seed ^ static_cast<std::uint64_t>(i);
    if (opt.mode == "noise") {
      NoiseSpec spec = opt.noise;
      spec.seed = file_seed;
      save_ply(apply_noise(cloud, spec), out_path);
      status[i] = 1;
    } else if (opt.mode == "holes") {
      HoleSpec spec = opt.holes;
      spec.seed = file_seed;
      if (static_cast<int>(cloud.size()) < spec.min_remaining) {
        status[i] = 2;
        return;
      }
      const auto result = punch_holes(cloud, spec);
      save_ply(result.cloud, out_path);
      Json sidecar;
      sidecar["id"] = ids[i];
      sidecar["removed"] = result.removed;
      sidecar["seed"] = file_seed;
      std::ofstream side((fs::path(opt.out_dir) / (ids[i] + ".removed.json")).string(),
                         std::ios::binary);
      side << sidecar.dump(2) << "\n";
      status[i] = 1;
    } else {
      throw Error("cmd_perturb: unknown mode " + opt.mode);
    }
  });
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (status[i] == 1) summary.processed.push_back(ids[i]);
    else if (status[i] == 2) summary.skipped.push_back(ids[i]);
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Chamfer retrieval over a candidate directory

struct RetrieveOptions {
  std::string query_dir;       // .ply clouds
  std::string candidate_dir;   // paired .json / .ply
  std::string out_dir;
  int jobs = 1;
};

inline void cmd_retrieve(const RetrieveOptions& opt) {
  const auto query_ids = list_ids(opt.query_dir, ".ply");
  const auto cand_ids = list_ids(opt.candidate_dir, ".json");
  if (query_ids.empty()) throw Error("cmd_retrieve: no query clouds");
  if (cand_ids.empty()) throw Error("cmd_retrieve: no candidates");
  std::vector<PointCloud> cand_clouds;
  std::vector<CadSequence> cand_seqs;
  for (const auto& id : cand_ids) {
    cand_clouds.push_back(load_ply((fs::path(opt.candidate_dir) / (id + ".ply")).string()));
    cand_seqs.push_back(load_sequence((fs::path(opt.candidate_dir) / (id + ".json")).string()));
  }
  fs::create_directories(opt.out_dir);
  emit_run_config(opt.out_dir, "retrieve",
                  {{"queries", opt.query_dir}, {"candidates", opt.candidate_dir},
                   {"jobs", opt.jobs}});
  parallel_for(query_ids.size(), opt.jobs, [&](std::size_t i) {
    const PointCloud query = load_ply((fs::path(opt.query_dir) / (query_ids[i] + ".ply")).string());
    const std::size_t best = retrieve_nearest_index(query, cand_clouds);
    save_sequence(cand_seqs[best], (fs::path(opt.out_dir) / (query_ids[i] + ".json")).string());
  });
}

}  // namespace transcad
