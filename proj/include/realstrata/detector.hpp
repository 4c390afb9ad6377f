#pragma once

// Search for (a^2, n, kappa, phi): a gluing kernel <kappa + n alpha> in
// disc(S_h) + [1/a^2] and an induced involution phi with phi(kappa) = -kappa
// such that phi + (-id) acts trivially on K-perp/K, plus the genus check.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "realstrata/automorphism.hpp"
#include "realstrata/candidate.hpp"
#include "realstrata/lattices.hpp"
#include "realstrata/nikulin.hpp"

namespace realstrata {

enum class Verdict { WitnessFound, NoneExists, Inconclusive, NeedsTGram };
enum class Basis { None, Corlem1, Corlem2, RankT2, RankT3 };
enum class Reason { NoKappa, NoInvolutionCond2, NoInvolutionCond3, GenusEmpty, Witness };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::WitnessFound: return "witness_found";
    case Verdict::NoneExists: return "none_exists";
    case Verdict::Inconclusive: return "inconclusive";
    case Verdict::NeedsTGram: return "needs_T_gram";
  }
  return "?";
}

inline std::string to_string(Basis b) {
  switch (b) {
    case Basis::None: return "none";
    case Basis::Corlem1: return "corlem1";
    case Basis::Corlem2: return "corlem2";
    case Basis::RankT2: return "rankT2";
    case Basis::RankT3: return "rankT3";
  }
  return "?";
}

inline std::string to_string(Reason r) {
  switch (r) {
    case Reason::NoKappa: return "no_kappa";
    case Reason::NoInvolutionCond2: return "no_involution_cond2";
    case Reason::NoInvolutionCond3: return "no_involution_cond3";
    case Reason::GenusEmpty: return "genus_empty";
    case Reason::Witness: return "witness";
  }
  return "?";
}

struct ModelKind {
  std::string name;  // quartic, sextic, or custom
  Int h2 = 4;

  static ModelKind quartic() { return {"quartic", 4}; }
  static ModelKind sextic() { return {"sextic", 2}; }
  static ModelKind custom(Int h2) { return {"custom", h2}; }

  /// "quartic", "sextic", "h2=N".
  static ModelKind parse(const std::string& text) {
    if (text == "quartic") return quartic();
    if (text == "sextic" || text == "sextic-planar") return sextic();
    if (text.rfind("h2=", 0) == 0) {
      const std::string v = text.substr(3);
      if (v.empty() || !std::all_of(v.begin(), v.end(), [](char c) { return c >= '0' && c <= '9'; }) || v.size() > 9)
        throw std::invalid_argument("bad model '" + text + "'");
      const Int h2 = std::stoll(v);
      if (h2 < 2 || h2 % 2) throw std::invalid_argument("h^2 must be a positive even integer");
      return custom(h2);
    }
    throw std::invalid_argument("unknown model '" + text + "' (expected quartic, sextic or h2=N)");
  }

  std::string label() const { return name == "custom" ? "h2=" + std::to_string(h2) : name; }
};

struct TraceEntry {
  Int a_square;
  Int n;
  std::optional<Element> kappa;
  Reason reason;

  bool operator==(const TraceEntry& o) const {
    return a_square == o.a_square && n == o.n && kappa == o.kappa && reason == o.reason;
  }
};

struct DetectorWitness {
  KernelCandidate candidate;
  DiscAutomorphism phi;
};

inline const char* kScopeNote =
    "A witness certifies only that S_h extends to some abstract homological type admitting an involutive "
    "skew-automorphism (a reflection t_a); it says nothing about any particular abstract homological type.";

struct DetectionReport {
  ModelKind model;
  RootSpec spec;
  int rank_S = 0;
  int rank_T = 0;
  FiniteQuadraticForm disc;
  Verdict verdict = Verdict::Inconclusive;
  Basis basis = Basis::None;
  std::string scope_note = kScopeNote;
  std::optional<DetectorWitness> witness;
  std::optional<SkewWitness> skew_witness;  // rank S = 19
  std::optional<IntMatrix> t_gram;
  std::vector<TraceEntry> trace;
  double wall_time_ms = 0;
};

/// Even divisors of 2 exp(disc S_h), ascending.
inline std::vector<Int> enumerate_a_squares(const PolarizedForm& pf) {
  std::vector<Int> out;
  for (Int d : divisors(2 * pf.form.exponent()))
    if (d % 2 == 0) out.push_back(d);
  return out;
}

/// kappa of order a^2/n with q(kappa) = -n^2/a^2, lexicographic; `elements` is disc S_h sorted.
inline std::vector<KernelCandidate> kernel_candidates(const PolarizedForm& pf, Int a_square, Int n,
                                                      const std::vector<Element>& elements) {
  std::vector<KernelCandidate> out;
  if (a_square % n != 0) return out;
  const Int ord = a_square / n;
  if (pf.form.exponent() % ord != 0) return out;
  for (const auto& x : elements) {
    KernelCandidate c{a_square, n, x};
    if (c.valid(pf.form)) out.push_back(std::move(c));
  }
  return out;
}

inline std::vector<KernelCandidate> kernel_candidates(const PolarizedForm& pf, Int a_square) {
  const auto elements = whole_group(pf.form).elements();
  std::vector<KernelCandidate> out;
  for (Int n : {Int(1), Int(2)}) {
    auto part = kernel_candidates(pf, a_square, n, elements);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

struct CheckResult {
  bool ok = false;
  Reason reason = Reason::NoInvolutionCond2;
};

/// Conditions on phi: phi(kappa) = -kappa, and phi + (-id on A) is trivial on K-perp/K.
inline CheckResult check_involution(const PolarizedForm& pf, const Gluing& g, const KernelCandidate& cand,
                                    const DiscAutomorphism& phi) {
  const FiniteQuadraticForm& f = pf.form;
  if (phi.apply(f, cand.kappa) != f.negate(cand.kappa)) return {false, Reason::NoInvolutionCond2};
  const std::size_t k = f.rank();
  for (const auto& x : g.quotient.perp().canonical_basis()) {
    Element xs(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k));
    Element img = phi.apply(f, xs);
    img.push_back(-x[k]);
    const Element diff = g.ambient.add(img, g.ambient.negate(x));
    if (!g.kernel.contains(diff)) return {false, Reason::NoInvolutionCond3};
  }
  return {true, Reason::Witness};
}

inline CheckResult check_candidate(const PolarizedForm& pf, const KernelCandidate& cand, const DiscAutomorphism& phi) {
  if (!phi.is_automorphism(pf.form) || !phi.is_involution(pf.form))
    throw std::invalid_argument("phi is not an involutive automorphism of disc S_h");
  const Gluing g = make_gluing(pf.form, cand);
  return check_involution(pf, g, cand, phi);
}

struct CandidateOutcome {
  Reason reason;
  std::optional<DiscAutomorphism> phi;
};

/// Full evaluation of one candidate against the sorted involution list.
inline CandidateOutcome evaluate_candidate(const PolarizedForm& pf, const KernelCandidate& cand,
                                           const std::vector<DiscAutomorphism>& involutions) {
  const Gluing g = make_gluing(pf.form, cand);
  // signature/length failures are reported before the involution search, determinant failures after
  const EmbedResult genus = embeds_into_big_L({2, pf.rank_S(), g.quotient.form()});
  if (genus.failed == EmbedClause::Signature || genus.failed == EmbedClause::Length)
    return {Reason::GenusEmpty, std::nullopt};
  bool any_cond2 = false;
  std::optional<DiscAutomorphism> found;
  for (const auto& phi : involutions) {
    const CheckResult r = check_involution(pf, g, cand, phi);
    if (r.reason != Reason::NoInvolutionCond2) any_cond2 = true;
    if (r.ok) {
      found = phi;
      break;
    }
  }
  if (!found) return {any_cond2 ? Reason::NoInvolutionCond3 : Reason::NoInvolutionCond2, std::nullopt};
  if (!genus.embeds) return {Reason::GenusEmpty, std::nullopt};
  return {Reason::Witness, found};
}

struct DetectOptions {
  std::optional<BinaryLattice> t_gram;
  unsigned threads = 1;
};

namespace detail {

struct PendingItem {
  Int a_square;
  Int n;
  std::optional<KernelCandidate> cand;  // empty: no kappa for (a^2, n)
};

inline std::vector<PendingItem> candidate_schedule(const PolarizedForm& pf) {
  const auto elements = whole_group(pf.form).elements();
  std::vector<PendingItem> items;
  for (Int a2 : enumerate_a_squares(pf))
    for (Int n : {Int(1), Int(2)}) {
      if (a2 % n != 0) continue;
      auto cands = kernel_candidates(pf, a2, n, elements);
      if (cands.empty()) items.push_back({a2, n, std::nullopt});
      for (auto& c : cands) items.push_back({a2, n, std::move(c)});
    }
  return items;
}

}  // namespace detail

inline DetectionReport detect(const ModelKind& model, const RootSpec& spec, const DetectOptions& opts = {}) {
  const auto start = std::chrono::steady_clock::now();
  DetectionReport rep;
  rep.model = model;
  rep.spec = spec;
  rep.rank_S = spec.rank();
  if (rep.rank_S > 19) throw std::invalid_argument("rank of the singularity lattice exceeds 19");
  rep.rank_T = 21 - rep.rank_S;
  const PolarizedForm pf = polarized_disc(spec, model.h2);
  rep.disc = pf.form;
  auto finish = [&]() {
    rep.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return rep;
  };

  if (rep.rank_S == 19) {
    rep.basis = Basis::RankT2;
    if (!opts.t_gram) {
      rep.verdict = Verdict::NeedsTGram;
      return finish();
    }
    rep.t_gram = opts.t_gram->gram();
    rep.skew_witness = maximizing_skew_witness(*opts.t_gram, pf);
    rep.verdict = rep.skew_witness ? Verdict::WitnessFound : Verdict::NoneExists;
    return finish();
  }

  const auto involutions = disc_involutions(pf);
  const auto items = detail::candidate_schedule(pf);
  const unsigned threads = std::max(1u, opts.threads);
  const std::size_t batch = std::max<std::size_t>(1, threads * 4);
  std::vector<std::optional<CandidateOutcome>> results(items.size());
  for (std::size_t lo = 0; lo < items.size(); lo += batch) {
    const std::size_t hi = std::min(items.size(), lo + batch);
    auto work = [&](std::size_t i) {
      if (items[i].cand) results[i] = evaluate_candidate(pf, *items[i].cand, involutions);
    };
    if (threads == 1) {
      for (std::size_t i = lo; i < hi; ++i) work(i);
    } else {
      std::atomic<std::size_t> next{lo};
      std::vector<std::thread> pool;
      std::exception_ptr err;
      std::mutex err_mu;
      for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&]() {
          for (std::size_t i = next++; i < hi; i = next++) {
            try {
              work(i);
            } catch (...) {
              std::lock_guard<std::mutex> lock(err_mu);
              if (!err) err = std::current_exception();
            }
          }
        });
      for (auto& th : pool) th.join();
      if (err) std::rethrow_exception(err);
    }
    // commit in order
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& it = items[i];
      if (!it.cand) {
        rep.trace.push_back({it.a_square, it.n, std::nullopt, Reason::NoKappa});
        continue;
      }
      const CandidateOutcome& out = *results[i];
      rep.trace.push_back({it.a_square, it.n, it.cand->kappa, out.reason});
      if (out.reason == Reason::Witness) {
        rep.witness = DetectorWitness{*it.cand, *out.phi};
        rep.verdict = Verdict::WitnessFound;
        rep.basis = Basis::Corlem1;
        return finish();
      }
    }
  }
  if (rep.rank_S == 18) {
    rep.verdict = Verdict::NoneExists;
    rep.basis = Basis::Corlem2;
  } else {
    rep.verdict = Verdict::Inconclusive;
    rep.basis = Basis::None;
  }
  return finish();
}

}  // namespace realstrata
