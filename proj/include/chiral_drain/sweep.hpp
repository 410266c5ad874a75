#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "chiral_drain/core.hpp"
#include "chiral_drain/entanglement.hpp"
#include "chiral_drain/gaussian.hpp"
#include "chiral_drain/lattice.hpp"
#include "chiral_drain/steady.hpp"

namespace chiral_drain {

enum class SweepAxis { disorder, loss };

inline std::string_view to_string(SweepAxis a) { return a == SweepAxis::disorder ? "disorder_variance" : "loss"; }

/// Substream seed for one realization, derived from the run seed and the
/// realization index through std::seed_seq (portable, fully specified).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t realization) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(realization), static_cast<std::uint32_t>(realization >> 32)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

struct SweepRow {
    Real value = 0.0;
    std::size_t realization = 0;
    std::uint64_t seed = 0;
    Real en_bar = 0.0;
    Real purity = 0.0;
};

struct SweepAggregate {
    Real value = 0.0;
    std::size_t count = 0;
    Real mean = 0.0;
    Real stderr_mean = 0.0;
    Real mean_purity = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;  // ordered by (value index, realization)
    std::vector<SweepAggregate> aggregates;
};

/// Realization failed to produce a steady state; carries the seed for replay.
class RealizationError : public NumericalError {
public:
    RealizationError(const std::string& what, Real value, std::size_t realization, std::uint64_t seed)
        : NumericalError(what), value(value), realization(realization), seed(seed) {}
    Real value;
    std::size_t realization;
    std::uint64_t seed;
};

struct SweepConfig {
    SweepAxis axis = SweepAxis::disorder;
    std::vector<Real> values;
    std::size_t realizations = 20;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
};

/// For every axis value and realization: rebuild the lattice with fresh
/// on-site disorder (drain site excluded) or set the internal loss rate, solve
/// for the steady state, and record the mirrored-pair entanglement. Loss runs
/// are deterministic and use a single realization.
inline SweepResult run_sweep(const Lattice& base, const DrainSpec& spec, const SweepConfig& cfg) {
    for (Real v : cfg.values)
        if (!(v >= 0.0)) throw std::invalid_argument("sweep: axis values must be non-negative");
    if (cfg.realizations == 0) throw std::invalid_argument("sweep: at least one realization required");
    spec.check(base.n_sites());

    const std::size_t per_value = cfg.axis == SweepAxis::loss ? 1 : cfg.realizations;
    const std::size_t total = cfg.values.size() * per_value;
    std::vector<SweepRow> rows(total);
    std::vector<std::exception_ptr> errors(total);

    auto work = [&](std::size_t task) {
        const std::size_t vi = task / per_value, ri = task % per_value;
        SweepRow& row = rows[task];
        row.value = cfg.values[vi];
        row.realization = ri;
        row.seed = derive_seed(cfg.seed, ri);
        try {
            DrainSpec local = spec;
            CovarianceState state;
            if (cfg.axis == SweepAxis::disorder) {
                const Lattice noisy = add_disorder(base, row.value, row.seed, {spec.drain});
                state = steady_state(noisy, local);
            } else {
                local.loss = row.value;
                state = steady_state(base, local);
            }
            row.en_bar = mirrored_pair_average(state, base);
            row.purity = purity(state);
        } catch (...) {
            errors[task] = std::current_exception();
        }
    };

    const unsigned jobs = std::max(1u, std::min<unsigned>(cfg.jobs, static_cast<unsigned>(std::max<std::size_t>(total, 1))));
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 1; w < jobs; ++w)
            pool.emplace_back([&] {
                for (std::size_t t = next++; t < total; t = next++) work(t);
            });
        for (std::size_t t = next++; t < total; t = next++) work(t);
    }

    for (std::size_t t = 0; t < total; ++t) {
        if (!errors[t]) continue;
        std::string msg = "unknown error";
        try {
            std::rethrow_exception(errors[t]);
        } catch (const std::exception& e) {
            msg = e.what();
        } catch (...) {
        }
        const auto& r = rows[t];
        throw RealizationError("sweep: realization " + std::to_string(r.realization) + " at " +
                                   std::string(to_string(cfg.axis)) + "=" + std::to_string(r.value) +
                                   " failed (replay seed " + std::to_string(r.seed) + "): " + msg,
                               r.value, r.realization, r.seed);
    }

    SweepResult out;
    out.rows = std::move(rows);
    for (std::size_t vi = 0; vi < cfg.values.size(); ++vi) {
        SweepAggregate agg;
        agg.value = cfg.values[vi];
        agg.count = per_value;
        Real sum = 0.0, sum_p = 0.0;
        for (std::size_t ri = 0; ri < per_value; ++ri) {
            sum += out.rows[vi * per_value + ri].en_bar;
            sum_p += out.rows[vi * per_value + ri].purity;
        }
        agg.mean = sum / static_cast<Real>(per_value);
        agg.mean_purity = sum_p / static_cast<Real>(per_value);
        if (per_value > 1) {
            Real ss = 0.0;
            for (std::size_t ri = 0; ri < per_value; ++ri) {
                const Real d = out.rows[vi * per_value + ri].en_bar - agg.mean;
                ss += d * d;
            }
            agg.stderr_mean = std::sqrt(ss / static_cast<Real>(per_value - 1)) / std::sqrt(static_cast<Real>(per_value));
        }
        out.aggregates.push_back(agg);
    }
    return out;
}

}  // namespace chiral_drain
