// Copyright 2026 The flashsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Quadrature-based oracles for the flash law: normalization, the
// consistency of the n-flash family, and binned n-flash densities.

#include <algorithm>
#include <cmath>
#include <string>

#include "flashsim/verify.hpp"

namespace flashsim {

void QuadratureGrid::validate() const {
    if (!(t_max > 0.0) || !std::isfinite(t_max)) {
        throw Error(ErrorCode::InvalidArgument, "quadrature t_max must be positive");
    }
    if (n_steps < 2 && rule != QuadratureRule::Exact) {
        throw Error(ErrorCode::InvalidArgument, "quadrature needs n_steps >= 2");
    }
    if (rule == QuadratureRule::Simpson && n_steps % 2 != 0) {
        throw Error(ErrorCode::InvalidArgument, "Simpson rule needs an even n_steps");
    }
}

std::vector<double> QuadratureGrid::weights() const {
    validate();
    const double h = step();
    std::vector<double> w(n_steps + 1, h);
    switch (rule) {
        case QuadratureRule::Trapezoid:
            w.front() = w.back() = 0.5 * h;
            break;
        case QuadratureRule::Simpson:
            for (std::size_t k = 0; k <= n_steps; ++k) {
                w[k] = (k == 0 || k == n_steps) ? h / 3.0 : (k % 2 == 1 ? 4.0 * h / 3.0 : 2.0 * h / 3.0);
            }
            break;
        case QuadratureRule::Exact:
            throw Error(ErrorCode::InvalidArgument, "the exact rule has no node weights");
    }
    return w;
}

int QuadratureGrid::order() const {
    switch (rule) {
        case QuadratureRule::Trapezoid: return 2;
        case QuadratureRule::Simpson: return 4;
        case QuadratureRule::Exact: return 0;
    }
    return 0;
}

QuadratureGrid QuadratureGrid::coarsened() const { return QuadratureGrid{t_max, n_steps / 2, rule}; }

double observed_order(double error_fine, double error_coarse) {
    if (!(error_fine > 0.0) || !(error_coarse > 0.0)) return 0.0;
    return std::log2(error_coarse / error_fine);
}

namespace {

bool can_coarsen(const QuadratureGrid& grid) {
    if (grid.rule == QuadratureRule::Exact || grid.n_steps % 2 != 0) return false;
    const QuadratureGrid c = grid.coarsened();
    return c.n_steps >= 2 && (c.rule != QuadratureRule::Simpson || c.n_steps % 2 == 0);
}

void require_diagonal(const FlashModel& model) {
    if (!model.is_diagonal()) {
        throw Error(ErrorCode::InvalidArgument, "closed-form integrals need a diagonal model");
    }
}

// sum_{i,m} P^* Lambda_i(x_m) P, through the cached square roots.
ComplexMatrix rate_sandwich(const FlashModel& model, const ComplexMatrix& p) {
    ComplexMatrix sum = ComplexMatrix::Zero(p.cols(), p.cols());
    for (std::size_t i = 0; i < model.n_labels(); ++i) {
        for (std::size_t m = 0; m < model.n_sites(); ++m) {
            const ComplexMatrix sp = model.sqrt_rate(i, m) * p;
            sum.noalias() += sp.adjoint() * sp;
        }
    }
    return sum;
}

ComplexMatrix kernel_matrix(const FlashModel& model, const FlashHistory& history) {
    ComplexMatrix k = ComplexMatrix::Identity(model.dim(), model.dim());
    double clock = 0.0;
    for (const FlashRecord& f : history) {
        if (f.t < clock) throw Error(ErrorCode::NonMonotoneHistory, "history times decrease");
        k = model.sqrt_rate(f.label, f.site) * semigroup_exp(model.generator(), f.t - clock) * k;
        clock = f.t;
    }
    return k;
}

// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch).
std::pair<RealVector, RealVector> gauss_legendre(std::size_t n) {
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "need at least one Gauss node");
    const auto k = static_cast<Eigen::Index>(n);
    RealMatrix jacobi = RealMatrix::Zero(k, k);
    for (Eigen::Index i = 1; i < k; ++i) {
        const double b = static_cast<double>(i) / std::sqrt(4.0 * static_cast<double>(i * i) - 1.0);
        jacobi(i, i - 1) = jacobi(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<RealMatrix> eig(jacobi);
    RealVector w = 2.0 * eig.eigenvectors().row(0).transpose().array().square();
    return {eig.eigenvalues(), w};
}

struct Node {
    double t;
    double w;
};

std::vector<Node> gauss_nodes(const std::pair<RealVector, RealVector>& rule, double a, double b) {
    std::vector<Node> out;
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (Eigen::Index k = 0; k < rule.first.size(); ++k) {
        out.push_back({mid + half * rule.first(k), half * rule.second(k)});
    }
    return out;
}

FlashDensityTable empty_table(std::size_t n, std::size_t labels, std::size_t sites,
                              const QuadratureGrid& bins) {
    if (n != 1 && n != 2) throw Error(ErrorCode::InvalidArgument, "flash tables support n = 1 or 2");
    if (!(bins.t_max > 0.0) || bins.n_steps == 0) {
        throw Error(ErrorCode::InvalidArgument, "flash table needs t_max > 0 and at least one bin");
    }
    FlashDensityTable t;
    t.n = n;
    t.n_labels = labels;
    t.n_sites = sites;
    t.n_bins = bins.n_steps;
    t.t_max = bins.t_max;
    const double per = static_cast<double>(labels * sites * bins.n_steps);
    const double cells = n == 1 ? per : per * per;
    if (cells > static_cast<double>(kMaxTableCells)) {
        throw Error(ErrorCode::TableTooLarge, std::to_string(cells) + " cells");
    }
    t.mass.assign(static_cast<std::size_t>(cells), 0.0);
    return t;
}

double sum_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace

double normalization_integral(const FlashModel& model, const ComplexVector& psi,
                              const QuadratureGrid& grid) {
    require_normalized(model, psi);
    if (grid.rule == QuadratureRule::Exact) {
        require_diagonal(model);
        // int_0^T lambda e^{-lambda t} dt + e^{-lambda T} per basis state.
        double total = 0.0;
        for (Eigen::Index k = 0; k < model.dim(); ++k) {
            const double lambda = model.total_rate()(k, k).real();
            const double p = std::norm(psi(k));
            total += p * (-std::expm1(-lambda * grid.t_max)) + p * std::exp(-lambda * grid.t_max);
        }
        return total;
    }
    const std::vector<double> w = grid.weights();
    const ComplexMatrix e = semigroup_exp(model.generator(), grid.step());
    ComplexVector v = psi;
    double integral = 0.0;
    for (std::size_t k = 0; k <= grid.n_steps; ++k) {
        if (k > 0) v = e * v;
        double f = 0.0;
        for (std::size_t i = 0; i < model.n_labels(); ++i) {
            for (std::size_t m = 0; m < model.n_sites(); ++m) {
                f += (model.sqrt_rate(i, m) * v).squaredNorm();
            }
        }
        integral += w[k] * f;
    }
    return integral + v.squaredNorm();
}

CheckReport check_normalization(const FlashModel& model, const ComplexVector& psi,
                                const QuadratureGrid& grid, double threshold) {
    grid.validate();
    CheckReport r;
    r.name = "normalization";
    r.inputs_digest = Digest().add(model).add(ComplexMatrix(psi)).add(grid.t_max)
                          .add(static_cast<std::uint64_t>(grid.n_steps)).hex();
    r.metric_name = "defect";
    const double integral = normalization_integral(model, psi, grid);
    r.metric = std::abs(integral - 1.0);
    r.threshold = threshold;
    r.pass = r.metric <= threshold;
    r.details.emplace_back("integral", integral);
    if (can_coarsen(grid)) {
        const double coarse = std::abs(normalization_integral(model, psi, grid.coarsened()) - 1.0);
        r.details.emplace_back("defect_coarse", coarse);
        r.details.emplace_back("observed_order", observed_order(r.metric, coarse));
    }
    return r;
}

double consistency_error(const FlashModel& model, const FlashHistory& history,
                         const QuadratureGrid& grid) {
    grid.validate();
    const ComplexMatrix k = kernel_matrix(model, history);
    const ComplexMatrix target = k.adjoint() * k;
    ComplexMatrix lhs;

    if (grid.rule == QuadratureRule::Exact) {
        require_diagonal(model);
        const Eigen::Index d = model.dim();
        RealVector diag = RealVector::Zero(d);
        for (Eigen::Index b = 0; b < d; ++b) {
            const double lambda = model.total_rate()(b, b).real();
            const double decay = std::exp(-lambda * grid.t_max);
            double flashes = 0.0;
            if (lambda > 0.0) {
                const double frac = -std::expm1(-lambda * grid.t_max) / lambda;
                for (std::size_t i = 0; i < model.n_labels(); ++i) {
                    for (std::size_t m = 0; m < model.n_sites(); ++m) {
                        flashes += std::norm(model.sqrt_rate(i, m)(b, b)) * frac;
                    }
                }
            }
            diag(b) = flashes + decay;
        }
        lhs = k.adjoint() * diag.cast<Complex>().asDiagonal() * k;
    } else {
        const std::vector<double> w = grid.weights();
        const ComplexMatrix e = semigroup_exp(model.generator(), grid.step());
        ComplexMatrix p = k;
        lhs = ComplexMatrix::Zero(k.cols(), k.cols());
        for (std::size_t j = 0; j <= grid.n_steps; ++j) {
            if (j > 0) p = e * p;
            lhs += w[j] * rate_sandwich(model, p);
        }
        lhs += p.adjoint() * p;
    }
    const double scale = target.norm();
    return scale > 0.0 ? (lhs - target).norm() / scale : (lhs - target).norm();
}

CheckReport check_consistency(const FlashModel& model, std::size_t n, const QuadratureGrid& grid,
                              double threshold, std::size_t n_histories, std::uint64_t seed) {
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "consistency needs n >= 1");
    grid.validate();
    std::vector<FlashHistory> histories;
    if (n == 1) {
        histories.emplace_back();
    } else {
        Philox4x32 rng(seed, 0);
        const double span = grid.t_max / static_cast<double>(n);
        for (std::size_t h = 0; h < std::max<std::size_t>(1, n_histories); ++h) {
            for (int attempt = 0; attempt < 100; ++attempt) {
                FlashHistory hist;
                double t = 0.0;
                for (std::size_t k = 0; k + 1 < n; ++k) {
                    t += span * rng.uniform();
                    const auto site = static_cast<std::size_t>(rng.uniform() * static_cast<double>(model.n_sites()));
                    const auto label = static_cast<std::size_t>(rng.uniform() * static_cast<double>(model.n_labels()));
                    hist.push_back({t, site, label});
                }
                const ComplexMatrix k = kernel_matrix(model, hist);
                if (k.norm() > 0.0) {
                    histories.push_back(std::move(hist));
                    break;
                }
            }
        }
    }

    CheckReport r;
    r.name = "consistency_n" + std::to_string(n);
    r.inputs_digest = Digest().add(model).add(grid.t_max).add(static_cast<std::uint64_t>(grid.n_steps))
                          .add(static_cast<std::uint64_t>(n)).add(seed).hex();
    r.metric_name = "max_relative_frobenius_error";
    double worst = 0.0;
    double worst_coarse = 0.0;
    const bool coarsen = can_coarsen(grid);
    for (const auto& hist : histories) {
        worst = std::max(worst, consistency_error(model, hist, grid));
        if (coarsen) worst_coarse = std::max(worst_coarse, consistency_error(model, hist, grid.coarsened()));
    }
    r.metric = worst;
    r.threshold = threshold;
    r.pass = worst <= threshold;
    r.details.emplace_back("histories", static_cast<double>(histories.size()));
    if (coarsen) {
        r.details.emplace_back("error_coarse", worst_coarse);
        r.details.emplace_back("observed_order", observed_order(worst, worst_coarse));
    }
    return r;
}

FlashDensityTable exact_flash_density(const FlashModel& model, const ComplexVector& psi0,
                                      std::size_t n, const QuadratureGrid& bins,
                                      std::size_t nodes_per_bin) {
    require_normalized(model, psi0);
    const std::size_t labels = model.n_labels();
    const std::size_t sites = model.n_sites();
    FlashDensityTable table = empty_table(n, labels, sites, bins);
    const auto rule = gauss_legendre(nodes_per_bin);
    const double width = bins.t_max / static_cast<double>(bins.n_steps);
    const ComplexMatrix& g = model.generator();

    for (std::size_t b1 = 0; b1 < table.n_bins; ++b1) {
        const double lo = width * static_cast<double>(b1);
        for (const Node& n1 : gauss_nodes(rule, lo, lo + width)) {
            const ComplexVector v1 = semigroup_exp(g, n1.t) * psi0;
            if (n == 1) {
                for (std::size_t i = 0; i < labels; ++i) {
                    for (std::size_t m = 0; m < sites; ++m) {
                        table.mass[table.cell(i, m, b1)] += n1.w * (model.sqrt_rate(i, m) * v1).squaredNorm();
                    }
                }
                continue;
            }
            std::vector<ComplexVector> after(labels * sites);
            for (std::size_t i = 0; i < labels; ++i) {
                for (std::size_t m = 0; m < sites; ++m) after[i * sites + m] = model.sqrt_rate(i, m) * v1;
            }
            for (std::size_t b2 = b1; b2 < table.n_bins; ++b2) {
                const double lo2 = b2 == b1 ? n1.t : width * static_cast<double>(b2);
                const double hi2 = width * static_cast<double>(b2 + 1);
                for (const Node& n2 : gauss_nodes(rule, lo2, hi2)) {
                    const ComplexMatrix w = semigroup_exp(g, n2.t - n1.t);
                    for (std::size_t c1 = 0; c1 < labels * sites; ++c1) {
                        const std::size_t cell1 = table.cell(c1 / sites, c1 % sites, b1);
                        const ComplexVector z = w * after[c1];
                        for (std::size_t i = 0; i < labels; ++i) {
                            for (std::size_t m = 0; m < sites; ++m) {
                                table.mass[cell1 * table.cells_per_flash() + table.cell(i, m, b2)] +=
                                    n1.w * n2.w * (model.sqrt_rate(i, m) * z).squaredNorm();
                            }
                        }
                    }
                }
            }
        }
    }
    table.remainder = 1.0 - sum_of(table.mass);
    return table;
}

FlashDensityTable marginal_flash_density(const FlashModel& model, const ComplexMatrix& rho0,
                                         const std::vector<bool>& observed, std::size_t n,
                                         const QuadratureGrid& bins, std::size_t nodes_per_bin) {
    const Eigen::Index d = model.dim();
    if (rho0.rows() != d || rho0.cols() != d) {
        throw Error(ErrorCode::InvalidArgument, "density matrix dimension does not match model");
    }
    if (observed.size() != model.n_labels()) {
        throw Error(ErrorCode::InvalidArgument, "one observed flag per label required");
    }
    const std::size_t sites = model.n_sites();
    std::vector<std::size_t> seen;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (observed[i]) seen.push_back(i);
    }
    FlashDensityTable table = empty_table(n, seen.size(), sites, bins);

    // Column-major vec: vec(A r B) = (B^T (x) A) vec(r).
    const ComplexMatrix id = ComplexMatrix::Identity(d, d);
    ComplexMatrix super = tensor(id, model.generator()) + tensor(model.generator().conjugate(), id);
    for (std::size_t i = 0; i < model.n_labels(); ++i) {
        if (observed[i]) continue;
        for (std::size_t m = 0; m < sites; ++m) {
            const ComplexMatrix& s = model.sqrt_rate(i, m);
            super += tensor(s.conjugate(), s);
        }
    }

    auto evolve = [&](const ComplexMatrix& rho, double t) {
        const ComplexVector v = semigroup_exp(super, t) * Eigen::Map<const ComplexVector>(rho.data(), d * d);
        return ComplexMatrix(Eigen::Map<const ComplexMatrix>(v.data(), d, d));
    };
    auto rate = [&](std::size_t label, std::size_t site, const ComplexMatrix& rho) {
        return (model.rates().at(label, site).matrix() * rho).trace().real();
    };

    const auto rule = gauss_legendre(nodes_per_bin);
    const double width = bins.t_max / static_cast<double>(bins.n_steps);
    const std::size_t per = seen.size() * sites;
    for (std::size_t b1 = 0; b1 < table.n_bins; ++b1) {
        const double lo = width * static_cast<double>(b1);
        for (const Node& n1 : gauss_nodes(rule, lo, lo + width)) {
            const ComplexMatrix r1 = evolve(rho0, n1.t);
            if (n == 1) {
                for (std::size_t a = 0; a < seen.size(); ++a) {
                    for (std::size_t m = 0; m < sites; ++m) {
                        table.mass[table.cell(a, m, b1)] += n1.w * rate(seen[a], m, r1);
                    }
                }
                continue;
            }
            std::vector<ComplexMatrix> after(per);
            for (std::size_t a = 0; a < seen.size(); ++a) {
                for (std::size_t m = 0; m < sites; ++m) {
                    const ComplexMatrix& s = model.sqrt_rate(seen[a], m);
                    after[a * sites + m] = s * r1 * s;
                }
            }
            for (std::size_t b2 = b1; b2 < table.n_bins; ++b2) {
                const double lo2 = b2 == b1 ? n1.t : width * static_cast<double>(b2);
                const double hi2 = width * static_cast<double>(b2 + 1);
                for (const Node& n2 : gauss_nodes(rule, lo2, hi2)) {
                    const ComplexMatrix prop = semigroup_exp(super, n2.t - n1.t);
                    for (std::size_t c1 = 0; c1 < per; ++c1) {
                        const std::size_t cell1 = table.cell(c1 / sites, c1 % sites, b1);
                        const ComplexVector v = prop * Eigen::Map<const ComplexVector>(after[c1].data(), d * d);
                        const ComplexMatrix r2 = Eigen::Map<const ComplexMatrix>(v.data(), d, d);
                        for (std::size_t a = 0; a < seen.size(); ++a) {
                            for (std::size_t m = 0; m < sites; ++m) {
                                table.mass[cell1 * table.cells_per_flash() + table.cell(a, m, b2)] +=
                                    n1.w * n2.w * rate(seen[a], m, r2);
                            }
                        }
                    }
                }
            }
        }
    }
    table.remainder = rho0.trace().real() - sum_of(table.mass);
    return table;
}

}  // namespace flashsim
