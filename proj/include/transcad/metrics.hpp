#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "transcad/cad.hpp"
#include "transcad/errors.hpp"

namespace transcad {

struct ScoringConfig {
  double k = 1.0;                  // decay rate of S(p_hat, p) = exp(-k * ||p_hat - p||)
  std::vector<double> thresholds;  // ascending, in (0,1); defaults to 0.05..0.95
  int eta = 3;                     // parameter-accuracy tolerance in quantization units
  // Open variant: zero the extrusion score on categorical mismatch instead
  // of embedding the categorical slots in the norm.
  bool gate_extrusion_categoricals = false;

  ScoringConfig() {
    for (int i = 1; i <= 19; ++i) thresholds.push_back(0.05 * static_cast<double>(i));
  }
};

struct CsssBreakdown {
  double total = 0.0;
  double loop_term = 0.0;
  double ext_term = 0.0;
  // only components present in the ground truth appear here
  std::map<std::string, double> per_component;
  int n_delta = 0;
  int n_rho = 0;
  int n_e = 0;
  std::vector<int> n_rho_per_loop;
};

namespace detail {

inline double score(double dist, double k) { return std::exp(-k * dist); }

// ||a - b|| over the 6-vector, skipping coordinates where both sides are
// sentinel (line midpoints). Mixed sentinel patterns only occur across
// types, which the indicator already zeroes.
inline double primitive_distance(const PrimitiveDelta& a, const PrimitiveDelta& b) {
  const auto fa = a.flat();
  const auto fb = b.flat();
  double sq = 0.0;
  for (int c = 0; c < 6; ++c) {
    const double va = fa[static_cast<std::size_t>(c)];
    const double vb = fb[static_cast<std::size_t>(c)];
    if (is_sentinel(va) && is_sentinel(vb)) continue;
    sq += (va - vb) * (va - vb);
  }
  return std::sqrt(sq);
}

inline double subvector_distance(const std::array<double, 11>& a, const std::array<double, 11>& b,
                                 std::initializer_list<int> idx) {
  double sq = 0.0;
  for (const int i : idx) {
    const double d = a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)];
    sq += d * d;
  }
  return std::sqrt(sq);
}

}  // namespace detail

// CAD Sequence Similarity Score. Loops, primitives and extrusions align
// positionally; every denominator is the max of the predicted and ground
// truth counts so both over- and under-prediction dilute the score.
inline CsssBreakdown csss(const CadSequence& pred, const CadSequence& gt,
                          const ScoringConfig& cfg = {}) {
  CsssBreakdown out;
  const auto pred_loops = pred.all_loops();
  const auto gt_loops = gt.all_loops();
  const auto pred_exts = pred.all_extrusions();
  const auto gt_exts = gt.all_extrusions();

  out.n_rho = static_cast<int>(std::max(pred_loops.size(), gt_loops.size()));
  out.n_e = static_cast<int>(std::max(pred_exts.size(), gt_exts.size()));

  double loop_sum = 0.0;
  std::map<std::string, std::pair<double, int>> prim_components;  // sum, count over gt prims
  for (int j = 0; j < out.n_rho; ++j) {
    const Loop* lp = j < static_cast<int>(pred_loops.size()) ? pred_loops[static_cast<std::size_t>(j)] : nullptr;
    const Loop* lg = j < static_cast<int>(gt_loops.size()) ? gt_loops[static_cast<std::size_t>(j)] : nullptr;
    const int np = lp ? static_cast<int>(lp->primitives.size()) : 0;
    const int ng = lg ? static_cast<int>(lg->primitives.size()) : 0;
    const int nj = std::max(np, ng);
    out.n_rho_per_loop.push_back(nj);
    out.n_delta += nj;
    for (int i = 0; i < nj; ++i) {
      const PrimitiveDelta* dp = (lp && i < np) ? &lp->primitives[static_cast<std::size_t>(i)] : nullptr;
      const PrimitiveDelta* dg = (lg && i < ng) ? &lg->primitives[static_cast<std::size_t>(i)] : nullptr;
      double s = 0.0;
      std::optional<PrimitiveType> tg;
      if (dg) tg = classify_primitive(*dg);
      if (dp && dg) {
        const auto tp = classify_primitive(*dp);
        if (tp && tg && *tp == *tg) {
          s = detail::score(detail::primitive_distance(*dp, *dg), cfg.k);
        }
      }
      loop_sum += s;
      if (tg) {
        auto& slot = prim_components[to_string(*tg)];
        slot.first += s;
        slot.second += 1;
      }
    }
  }
  out.loop_term = out.n_delta > 0 ? loop_sum / (2.0 * static_cast<double>(out.n_delta)) : 0.5;

  double ext_sum = 0.0;
  struct ExtComponent {
    const char* name;
    std::initializer_list<int> slots;
  };
  // Supplementary grouping of the 11 extrusion slots:
  //   Ext.        = extrusion type/amount (distances + both categoricals)
  //   Origin      = sketch origin in 3D
  //   Orientation = sketch plane orientation
  //   Size        = sketch scale
  static const ExtComponent kComponents[] = {
      {"ext", {7, 8, 9, 10}}, {"origin", {3, 4, 5}}, {"orientation", {0, 1, 2}}, {"size", {6}}};
  std::map<std::string, std::pair<double, int>> ext_components;
  for (int j = 0; j < out.n_e; ++j) {
    const Extrusion* ep = j < static_cast<int>(pred_exts.size()) ? pred_exts[static_cast<std::size_t>(j)] : nullptr;
    const Extrusion* eg = j < static_cast<int>(gt_exts.size()) ? gt_exts[static_cast<std::size_t>(j)] : nullptr;
    double s = 0.0;
    if (ep && eg) {
      const auto fp = ep->flat_continuous();
      const auto fg = eg->flat_continuous();
      double sq = 0.0;
      for (int i = 0; i < 11; ++i) {
        const double d = fp[static_cast<std::size_t>(i)] - fg[static_cast<std::size_t>(i)];
        sq += d * d;
      }
      s = detail::score(std::sqrt(sq), cfg.k);
      if (cfg.gate_extrusion_categoricals &&
          (ep->boolean_op != eg->boolean_op || ep->extent != eg->extent)) {
        s = 0.0;
      }
    }
    ext_sum += s;
    if (eg) {
      for (const auto& comp : kComponents) {
        double cs = 0.0;
        if (ep) {
          cs = detail::score(
              detail::subvector_distance(ep->flat_continuous(), eg->flat_continuous(), comp.slots),
              cfg.k);
          if (cfg.gate_extrusion_categoricals &&
              (ep->boolean_op != eg->boolean_op || ep->extent != eg->extent)) {
            cs = 0.0;
          }
        }
        auto& slot = ext_components[comp.name];
        slot.first += cs;
        slot.second += 1;
      }
    }
  }
  out.ext_term = out.n_e > 0 ? ext_sum / (2.0 * static_cast<double>(out.n_e)) : 0.5;
  out.total = out.loop_term + out.ext_term;

  for (const auto& [name, sum_count] : prim_components)
    out.per_component[name] = sum_count.first / static_cast<double>(sum_count.second);
  for (const auto& [name, sum_count] : ext_components)
    out.per_component[name] = sum_count.first / static_cast<double>(sum_count.second);
  return out;
}

// Threshold-aggregated CSSS: the fraction of thresholds the score clears.
inline double apcs_from_csss(double csss_value, const ScoringConfig& cfg = {}) {
  if (cfg.thresholds.empty()) throw Error("apcs: empty threshold list");
  int passed = 0;
  for (const double t : cfg.thresholds)
    if (csss_value >= t) ++passed;
  return static_cast<double>(passed) / static_cast<double>(cfg.thresholds.size());
}

inline double apcs(const CadSequence& pred, const CadSequence& gt, const ScoringConfig& cfg = {}) {
  return apcs_from_csss(csss(pred, gt, cfg).total, cfg);
}

// ---------------------------------------------------------------------------
// Legacy DeepCAD-style accuracies. Commands are the flattened primitive and
// extrusion list; alignment is positional over the ground-truth length, so
// over-predicted tails are invisible to these metrics (documented flaw the
// CSSS fixtures contrast against).

enum class CommandType { Line, Arc, Circle, Extrude, Malformed };

inline std::vector<CommandType> command_types(const CadSequence& seq) {
  std::vector<CommandType> out;
  for (const auto& step : seq.steps) {
    for (const auto& loop : step.loops) {
      for (const auto& prim : loop.primitives) {
        const auto t = classify_primitive(prim);
        if (!t) {
          out.push_back(CommandType::Malformed);
        } else {
          switch (*t) {
            case PrimitiveType::Line: out.push_back(CommandType::Line); break;
            case PrimitiveType::Arc: out.push_back(CommandType::Arc); break;
            case PrimitiveType::Circle: out.push_back(CommandType::Circle); break;
          }
        }
      }
    }
    if (step.extrusion) out.push_back(CommandType::Extrude);
  }
  return out;
}

namespace detail {

// Quantized parameter list per command. Only live slots count: lines carry
// start/end (4), arcs and circles all 6 coordinates, extrusions 11.
inline std::vector<int> command_params(const CadSequence& seq, std::size_t command_index) {
  std::size_t idx = 0;
  for (const auto& step : seq.steps) {
    for (const auto& loop : step.loops) {
      for (const auto& prim : loop.primitives) {
        if (idx++ == command_index) {
          const auto t = classify_primitive(prim);
          std::vector<int> params;
          const auto f = prim.flat();
          for (int c = 0; c < 6; ++c) {
            if (t && *t == PrimitiveType::Line && (c == 2 || c == 3)) continue;
            params.push_back(quantize_coord(f[static_cast<std::size_t>(c)], seq.quantization));
          }
          return params;
        }
      }
    }
    if (step.extrusion && idx++ == command_index) {
      const auto q = step.extrusion->quantized(seq.quantization);
      return std::vector<int>(q.begin(), q.end());
    }
  }
  return {};
}

}  // namespace detail

// Eq.-style command type accuracy over the ground-truth length.
inline double acc_cmd(const CadSequence& pred, const CadSequence& gt) {
  const auto tp = command_types(pred);
  const auto tg = command_types(gt);
  if (tg.empty()) return tp.empty() ? 1.0 : 0.0;
  int match = 0;
  for (std::size_t i = 0; i < tg.size(); ++i) {
    if (i < tp.size() && tp[i] == tg[i]) ++match;
  }
  return static_cast<double>(match) / static_cast<double>(tg.size());
}

// Fraction of parameters within eta quantization units, restricted to
// correctly-typed commands. K = 0 returns 1.0 by convention (flagged).
inline double acc_param(const CadSequence& pred, const CadSequence& gt,
                        const ScoringConfig& cfg = {}, bool* no_matched_commands = nullptr) {
  const auto tp = command_types(pred);
  const auto tg = command_types(gt);
  long matched_params = 0;
  long within = 0;
  for (std::size_t i = 0; i < tg.size(); ++i) {
    if (i >= tp.size() || tp[i] != tg[i]) continue;
    const auto pg = detail::command_params(gt, i);
    const auto pp = detail::command_params(pred, i);
    for (std::size_t j = 0; j < pg.size(); ++j) {
      ++matched_params;
      if (j < pp.size() && std::abs(pg[j] - pp[j]) < cfg.eta) ++within;
    }
  }
  if (no_matched_commands) *no_matched_commands = matched_params == 0;
  if (matched_params == 0) return 1.0;
  return static_cast<double>(within) / static_cast<double>(matched_params);
}

// Macro-averaged F1 over {Loop, Extrusion, EOS} with positional alignment.
inline double f1_token_types(const std::vector<TokenType>& pred,
                             const std::vector<TokenType>& gt) {
  const std::size_t n = std::max(pred.size(), gt.size());
  auto at = [n](const std::vector<TokenType>& v, std::size_t i) {
    return i < v.size() ? v[i] : TokenType::Eos;
  };
  double macro = 0.0;
  for (const TokenType cls : {TokenType::Loop, TokenType::Extrusion, TokenType::Eos}) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool p = at(pred, i) == cls;
      const bool g = at(gt, i) == cls;
      if (p && g) ++tp;
      else if (p) ++fp;
      else if (g) ++fn;
    }
    const long denom = 2 * tp + fp + fn;
    macro += denom > 0 ? 2.0 * static_cast<double>(tp) / static_cast<double>(denom) : 0.0;
  }
  return macro / 3.0;
}

// ---------------------------------------------------------------------------
// Report aggregation.

struct EvalRow {
  std::string id;
  double apcs = 0.0;
  double csss = 0.0;
  std::optional<double> cd_reported;  // absent for invalid / unsampleable rows
  bool valid = false;
  double acc_cmd = 0.0;
  double acc_param = 0.0;
  double f1 = 0.0;
  std::optional<double> complexity_reported;
  int bin = -1;
};

struct EvalSummary {
  double mean_apcs = 0.0;
  double median_cd_reported = 0.0;  // over valid rows with a CD
  double invalidity_ratio = 0.0;
  double macro_f1 = 0.0;
  int total = 0;
  int valid_count = 0;
  struct Bin {
    int index = 0;
    int count = 0;
    double mean_apcs = 0.0;
    double median_cd_reported = 0.0;
    double max_complexity = 0.0;
  };
  std::vector<Bin> bins;
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

// Mean APCS, median reported CD over valid rows, invalidity ratio, macro F1.
// With q > 0 and complexities present, rows are ranked by complexity into q
// approximately equal-count bins (sizes differ by at most one).
inline EvalSummary aggregate_report(std::vector<EvalRow>& rows, int complexity_bins = 0) {
  if (rows.empty()) throw EmptyEvaluationError("aggregate_report: no rows");
  EvalSummary sum;
  sum.total = static_cast<int>(rows.size());
  double apcs_acc = 0.0, f1_acc = 0.0;
  std::vector<double> cds;
  for (const auto& r : rows) {
    apcs_acc += r.apcs;
    f1_acc += r.f1;
    if (r.valid) {
      ++sum.valid_count;
      if (r.cd_reported) cds.push_back(*r.cd_reported);
    }
  }
  sum.mean_apcs = apcs_acc / static_cast<double>(sum.total);
  sum.macro_f1 = f1_acc / static_cast<double>(sum.total);
  sum.median_cd_reported = detail::median(cds);
  sum.invalidity_ratio =
      static_cast<double>(sum.total - sum.valid_count) / static_cast<double>(sum.total);

  if (complexity_bins > 0) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (rows[i].complexity_reported) order.push_back(i);
    std::sort(order.begin(), order.end(), [&rows](std::size_t a, std::size_t b) {
      return *rows[a].complexity_reported < *rows[b].complexity_reported;
    });
    const int m = static_cast<int>(order.size());
    const int q = std::min(complexity_bins, std::max(1, m));
    const int base = m / q;
    const int extra = m % q;
    int cursor = 0;
    for (int b = 0; b < q; ++b) {
      const int size = base + (b < extra ? 1 : 0);
      EvalSummary::Bin bin;
      bin.index = b;
      bin.count = size;
      double acc = 0.0;
      std::vector<double> bin_cds;
      for (int i = 0; i < size; ++i) {
        auto& row = rows[order[static_cast<std::size_t>(cursor + i)]];
        row.bin = b;
        acc += row.apcs;
        if (row.valid && row.cd_reported) bin_cds.push_back(*row.cd_reported);
        bin.max_complexity = std::max(bin.max_complexity, *row.complexity_reported);
      }
      bin.mean_apcs = size > 0 ? acc / size : 0.0;
      bin.median_cd_reported = detail::median(bin_cds);
      cursor += size;
      sum.bins.push_back(bin);
    }
  }
  return sum;
}

}  // namespace transcad
