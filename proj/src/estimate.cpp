#include "netform/estimate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "netform/numeric.hpp"

namespace netform {

namespace {

void check_office(const EstimationSample& sample, std::uint32_t office_index,
                  SampleMode expected, const char* who) {
  if (office_index >= sample.offices.size())
    throw ValidationError(std::string(who) + ": office index out of range");
  if (sample.mode != expected)
    throw ValidationError(std::string(who) + ": sample was built for the other mode");
}

double outcome_value(const OfficeSample& os, std::uint32_t row, std::uint32_t col,
                     const std::optional<OutcomeShift>& shift) {
  double y = os.outcome(row, col) ? 1.0 : 0.0;
  if (shift) y -= shift->delta * os.value(row, col)[shift->coef];
  return y;
}

}  // namespace

OfficeFit ipw_fit(const EstimationSample& sample, std::uint32_t office_index,
                  const FitOptions& opts) {
  check_office(sample, office_index, SampleMode::ipw, "ipw_fit");
  const OfficeSample& os = sample.offices[office_index];
  const std::uint32_t m = os.rows(), J = os.cols(), d = os.dim;

  OfficeFit fit;
  fit.office_id = os.office_id;
  fit.kind = EstimatorKind::ipw;
  fit.rows = m;
  fit.dim = d;
  fit.shift = opts.shift;

  // Pooled weighted Gram sum_ij (1/P_ij) D_ij D_ij', accumulated per column.
  std::vector<double> gram(static_cast<std::size_t>(d) * d, 0.0);
  CompArray rhs(d);
  for (std::uint32_t c = 0; c < J; ++c) {
    for (std::uint32_t r = 0; r < m; ++r) {
      const double* v = os.value(r, c);
      double w = 1.0 / os.weight(r, c);
      add_outer(gram, v, static_cast<int>(d), w);
      double y = outcome_value(os, r, c, opts.shift);
      if (y != 0.0)
        for (std::uint32_t k = 0; k < d; ++k) rhs.add(k, y * w * v[k]);
    }
  }
  fit.gram = SymEigen::compute(gram.data(), static_cast<int>(d));
  if (!fit.gram.full_rank(sample.opts.rank_tol))
    throw NumericalError(
        "ipw_fit: singular weighted Gram on a support-validated sample "
        "(internal inconsistency)");
  std::vector<double> b(d);
  for (std::uint32_t k = 0; k < d; ++k) b[k] = rhs.value(k);
  fit.estimate = fit.gram.solve(b);

  if (opts.store_tables) {
    // S[i][i'] = sum_j Z_ij Y_i'j, then one solve per (i, i') entry.
    CompArray S(static_cast<std::size_t>(m) * m * d);
    for (std::uint32_t c = 0; c < J; ++c) {
      for (std::uint32_t ip = 0; ip < m; ++ip) {
        double y = outcome_value(os, ip, c, opts.shift);
        if (y == 0.0) continue;
        for (std::uint32_t i = 0; i < m; ++i) {
          const double* v = os.value(i, c);
          double w = y / os.weight(i, c);
          std::size_t base = (static_cast<std::size_t>(i) * m + ip) * d;
          for (std::uint32_t k = 0; k < d; ++k) S.add(base + k, w * v[k]);
        }
      }
    }
    fit.table.assign(static_cast<std::size_t>(m) * m * d, 0.0);
    std::vector<double> rhs_e(d), sol(d);
    for (std::uint32_t i = 0; i < m; ++i)
      for (std::uint32_t ip = 0; ip < m; ++ip) {
        std::size_t base = (static_cast<std::size_t>(i) * m + ip) * d;
        for (std::uint32_t k = 0; k < d; ++k) rhs_e[k] = S.value(base + k);
        fit.gram.solve(rhs_e.data(), sol.data());
        std::copy(sol.begin(), sol.end(), fit.table.begin() + base);
      }
    fit.has_table = true;
  }
  return fit;
}

OfficeFit within_fit(const EstimationSample& sample, std::uint32_t office_index,
                     const FitOptions& opts) {
  check_office(sample, office_index, SampleMode::late, "within_fit");
  const OfficeSample& os = sample.offices[office_index];
  const std::uint32_t m = os.rows(), J = os.cols(), d = os.dim;

  OfficeFit fit;
  fit.office_id = os.office_id;
  fit.kind = EstimatorKind::within;
  fit.rows = m;
  fit.dim = d;
  fit.shift = opts.shift;
  fit.col_gram.resize(J);

  CompArray gamma(d);
  CompArray G(opts.store_tables ? static_cast<std::size_t>(m) * m * d : 0);
  std::vector<double> gram(static_cast<std::size_t>(d) * d);
  std::vector<double> rhs(d), gj(d);
  std::vector<double> W(static_cast<std::size_t>(m) * d);

  for (std::uint32_t c = 0; c < J; ++c) {
    std::fill(gram.begin(), gram.end(), 0.0);
    std::fill(rhs.begin(), rhs.end(), 0.0);
    for (std::uint32_t r = 0; r < m; ++r) {
      const double* v = os.value(r, c);
      add_outer(gram, v, static_cast<int>(d));
      double y = outcome_value(os, r, c, opts.shift);
      if (y != 0.0)
        for (std::uint32_t k = 0; k < d; ++k) rhs[k] += y * v[k];
    }
    SymEigen f = SymEigen::compute(gram.data(), static_cast<int>(d));
    if (!f.full_rank(sample.opts.rank_tol))
      throw NumericalError(
          "within_fit: singular column Gram on a rank-validated sample "
          "(internal inconsistency)");
    f.solve(rhs.data(), gj.data());
    for (std::uint32_t k = 0; k < d; ++k) gamma.add(k, gj[k]);

    if (opts.store_tables) {
      for (std::uint32_t r = 0; r < m; ++r)
        f.solve(os.value(r, c), W.data() + static_cast<std::size_t>(r) * d);
      for (std::uint32_t ip = 0; ip < m; ++ip) {
        double y = outcome_value(os, ip, c, opts.shift);
        if (y == 0.0) continue;
        for (std::uint32_t i = 0; i < m; ++i) {
          std::size_t base = (static_cast<std::size_t>(i) * m + ip) * d;
          const double* wi = W.data() + static_cast<std::size_t>(i) * d;
          for (std::uint32_t k = 0; k < d; ++k) G.add(base + k, y * wi[k]);
        }
      }
    }
    fit.col_gram[c] = std::move(f);
  }

  fit.estimate.assign(d, 0.0);
  for (std::uint32_t k = 0; k < d; ++k) fit.estimate[k] = gamma.value(k) / J;

  if (opts.store_tables) {
    fit.table.assign(static_cast<std::size_t>(m) * m * d, 0.0);
    for (std::size_t idx = 0; idx < fit.table.size(); ++idx)
      fit.table[idx] = G.value(idx) / J;
    fit.has_table = true;
  }
  return fit;
}

std::vector<double> permuted_estimate(const OfficeFit& fit,
                                      const std::vector<std::uint32_t>& perm_rows) {
  if (!fit.has_table)
    throw ValidationError("permuted_estimate: fit has no lookup table");
  if (perm_rows.size() != fit.rows)
    throw ValidationError("permuted_estimate: permutation size mismatch");
  std::vector<std::uint8_t> seen(fit.rows, 0);
  for (std::uint32_t r : perm_rows) {
    if (r >= fit.rows || seen[r])
      throw ValidationError("permuted_estimate: not a bijection on office rows");
    seen[r] = 1;
  }
  std::vector<double> out(fit.dim, 0.0);
  for (std::uint32_t i = 0; i < fit.rows; ++i) {
    const double* e = fit.table_entry(perm_rows[i], i);
    for (std::uint32_t k = 0; k < fit.dim; ++k) out[k] += e[k];
  }
  return out;
}

std::vector<double> permuted_refit(const EstimationSample& sample,
                                   std::uint32_t office_index, const OfficeFit& fit,
                                   const std::vector<std::uint32_t>& perm_rows) {
  const OfficeSample& os = sample.offices[office_index];
  const std::uint32_t m = os.rows(), J = os.cols(), d = os.dim;
  if (perm_rows.size() != m)
    throw ValidationError("permuted_refit: permutation size mismatch");

  std::vector<double> out(d, 0.0);
  if (fit.kind == EstimatorKind::ipw) {
    // beta_pi = C * sum_ij Z_{pi(i) j} Y_ij; the weighted Gram is invariant
    // under row permutations, so the stored factorization is reused.
    CompArray rhs(d);
    for (std::uint32_t c = 0; c < J; ++c)
      for (std::uint32_t r = 0; r < m; ++r) {
        double y = outcome_value(os, r, c, fit.shift);
        if (y == 0.0) continue;
        std::uint32_t rp = perm_rows[r];
        const double* v = os.value(rp, c);
        double w = y / os.weight(rp, c);
        for (std::uint32_t k = 0; k < d; ++k) rhs.add(k, w * v[k]);
      }
    std::vector<double> b(d);
    for (std::uint32_t k = 0; k < d; ++k) b[k] = rhs.value(k);
    fit.gram.solve(b.data(), out.data());
  } else {
    CompArray acc(d);
    std::vector<double> rhs(d), gj(d);
    for (std::uint32_t c = 0; c < J; ++c) {
      std::fill(rhs.begin(), rhs.end(), 0.0);
      for (std::uint32_t r = 0; r < m; ++r) {
        double y = outcome_value(os, r, c, fit.shift);
        if (y == 0.0) continue;
        const double* v = os.value(perm_rows[r], c);
        for (std::uint32_t k = 0; k < d; ++k) rhs[k] += y * v[k];
      }
      fit.col_gram[c].solve(rhs.data(), gj.data());
      for (std::uint32_t k = 0; k < d; ++k) acc.add(k, gj[k]);
    }
    for (std::uint32_t k = 0; k < d; ++k) out[k] = acc.value(k) / J;
  }
  return out;
}

std::vector<std::uint32_t> AggregateFit::office_rows() const {
  std::vector<std::uint32_t> out;
  out.reserve(fits.size());
  for (const auto& f : fits) out.push_back(f.rows);
  return out;
}

AggregateFit aggregate(std::vector<OfficeFit> fits) {
  if (fits.empty()) throw ValidationError("aggregate: no office fits");
  AggregateFit agg;
  agg.kind = fits.front().kind;
  agg.dim = fits.front().dim;
  std::uint64_t m = 0;
  for (const auto& f : fits) {
    if (f.dim != agg.dim)
      throw ValidationError("aggregate: coefficient dimension mismatch");
    m += f.rows;
  }
  agg.total_hires = static_cast<std::uint32_t>(m);
  agg.office_count = static_cast<std::uint32_t>(fits.size());
  agg.estimate.assign(agg.dim, 0.0);
  for (auto& f : fits) {
    f.weight = static_cast<double>(f.rows) / static_cast<double>(m);
    for (std::uint32_t k = 0; k < agg.dim; ++k)
      agg.estimate[k] += f.weight * f.estimate[k];
  }
  agg.fits = std::move(fits);
  return agg;
}

AggregateFit fit_all(const EstimationSample& sample, EstimatorKind kind,
                     FitOptions opts, unsigned threads) {
  if ((kind == EstimatorKind::ipw) != (sample.mode == SampleMode::ipw))
    throw ValidationError("fit_all: estimator kind does not match sample mode");

  std::string guard_note;
  if (opts.store_tables) {
    std::uint64_t entries = 0;
    for (const auto& os : sample.offices)
      entries += static_cast<std::uint64_t>(os.rows()) * os.rows() * os.dim;
    if (entries > opts.table_budget) {
      opts.store_tables = false;
      guard_note = "table memory guard tripped (" + std::to_string(entries) +
                   " entries > budget); permutation statistics use refits";
    }
  }

  std::vector<OfficeFit> fits(sample.offices.size());
  unsigned n_threads = threads ? threads : std::thread::hardware_concurrency();
  n_threads = std::max(1u, std::min<unsigned>(n_threads, sample.offices.size()));
  if (n_threads <= 1 || sample.offices.size() <= 1) {
    for (std::uint32_t o = 0; o < sample.offices.size(); ++o)
      fits[o] = (kind == EstimatorKind::ipw) ? ipw_fit(sample, o, opts)
                                             : within_fit(sample, o, opts);
  } else {
    std::atomic<std::uint32_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto worker = [&] {
      for (;;) {
        std::uint32_t o = next.fetch_add(1);
        if (o >= sample.offices.size()) return;
        try {
          fits[o] = (kind == EstimatorKind::ipw) ? ipw_fit(sample, o, opts)
                                                 : within_fit(sample, o, opts);
        } catch (...) {
          std::lock_guard<std::mutex> lk(error_mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  AggregateFit agg = aggregate(std::move(fits));
  if (!guard_note.empty()) agg.notes.push_back(guard_note);
  return agg;
}

std::vector<double> permuted_aggregate(const AggregateFit& fit,
                                       const EstimationSample& sample,
                                       const Permutation& pi) {
  if (pi.rows.size() != fit.fits.size())
    throw ValidationError("permuted_aggregate: permutation/office count mismatch");
  std::vector<double> out(fit.dim, 0.0);
  for (std::uint32_t o = 0; o < fit.fits.size(); ++o) {
    const OfficeFit& f = fit.fits[o];
    std::vector<double> est = f.has_table
                                  ? permuted_estimate(f, pi.rows[o])
                                  : permuted_refit(sample, o, f, pi.rows[o]);
    for (std::uint32_t k = 0; k < fit.dim; ++k) out[k] += f.weight * est[k];
  }
  return out;
}

}  // namespace netform
