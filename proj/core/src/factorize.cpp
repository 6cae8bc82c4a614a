#include "fairrep/factorize.hpp"

#include "fairrep/det_rng.hpp"
#include "fairrep/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

namespace fairrep {

namespace {

// All value combinations of the chosen attributes, odometer order (last
// attribute fastest). With no attributes this is the single empty tuple,
// which gives unconditional statements their one stratum.
std::vector<Tuple> cross_product(const Schema& schema, const std::vector<std::size_t>& idx) {
    std::vector<Tuple> out;
    Tuple current(idx.size(), 0);
    for (;;) {
        out.push_back(current);
        std::size_t p = idx.size();
        for (;;) {
            if (p == 0) return out;
            --p;
            if (++current[p] < schema.at(idx[p]).domain.size()) break;
            current[p] = 0;
        }
    }
}

BigInt combination_count(const Schema& schema, const std::vector<std::size_t>& idx) {
    BigInt n = 1;
    for (std::size_t i : idx) n *= static_cast<unsigned>(schema.at(i).domain.size());
    return n;
}

std::map<Tuple, std::size_t> index_map(const std::vector<Tuple>& values) {
    std::map<Tuple, std::size_t> out;
    for (std::size_t i = 0; i < values.size(); ++i) out.emplace(values[i], i);
    return out;
}

Tuple pick(const Tuple& t, const std::vector<std::size_t>& idx) {
    Tuple out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(t[i]);
    return out;
}

// Rounds non-negative weights to integers summing to `total`: normalize so
// the weights sum to `total` exactly, floor, then hand the leftover units to
// the largest fractional parts (ties to the earliest cell).
std::vector<Count> largest_remainder(const std::vector<Rat>& weights, Count total) {
    Rat sum(0);
    for (const Rat& w : weights) {
        if (w < 0) throw std::logic_error("negative factorization weight");
        sum += w;
    }
    if (sum == 0) {
        if (total != 0) throw std::logic_error("cannot spread mass over an all-zero stratum");
        return std::vector<Count>(weights.size(), 0);
    }
    const Rat factor = Rat(total) / sum;
    std::vector<Count> cells(weights.size(), 0);
    std::vector<std::pair<Rat, std::size_t>> fractional;
    Count used = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const Rat scaled = weights[i] * factor;
        const BigInt floored = numerator(scaled) / denominator(scaled);
        cells[i] = floored.convert_to<Count>();
        used += cells[i];
        fractional.emplace_back(scaled - Rat(floored), i);
    }
    std::sort(fractional.begin(), fractional.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (Count extra = total - used, k = 0; k < extra; ++k) {
        cells[fractional[static_cast<std::size_t>(k)].second] += 1;
    }
    return cells;
}

struct IntegerizedStrata {
    std::vector<std::vector<Count>> counts;
    Count scale = 1;
    bool exact = true;
};

// Puts all coupled strata on one integer scale: the least common denominator
// when it fits under the cap (counts are then exactly scale times the
// rational entries), the cap itself with rounding otherwise.
IntegerizedStrata integerize_coupled(const ContingencyTensor& tensor, Count scale_cap) {
    if (scale_cap < 1) throw ValidationError("scale cap must be at least 1");
    std::vector<RatMatrix> coupled;
    coupled.reserve(tensor.z_values.size());
    for (std::size_t s = 0; s < tensor.z_values.size(); ++s) {
        coupled.push_back(coupling_matrix(tensor, s));
    }

    IntegerizedStrata out;
    BigInt common = 1;
    for (const RatMatrix& matrix : coupled) {
        for (const auto& row : matrix) {
            for (const Rat& cell : row) {
                common = boost::multiprecision::lcm(common, denominator(cell));
                if (common > scale_cap) {
                    out.exact = false;
                    break;
                }
            }
            if (!out.exact) break;
        }
        if (!out.exact) break;
    }
    out.scale = out.exact ? common.convert_to<Count>() : scale_cap;

    out.counts.reserve(coupled.size());
    for (std::size_t s = 0; s < coupled.size(); ++s) {
        const RatMatrix& matrix = coupled[s];
        std::vector<Rat> flat;
        flat.reserve(tensor.x_values.size() * tensor.y_values.size());
        for (const auto& row : matrix) {
            for (const Rat& cell : row) flat.push_back(cell * out.scale);
        }
        if (out.exact) {
            std::vector<Count> cells(flat.size());
            for (std::size_t i = 0; i < flat.size(); ++i) {
                cells[i] = numerator(flat[i]).convert_to<Count>();
            }
            out.counts.push_back(std::move(cells));
        } else {
            out.counts.push_back(largest_remainder(flat, tensor.stratum_total(s) * out.scale));
        }
    }
    return out;
}

Bag bag_from_counts(const ContingencyTensor& tensor, const std::vector<std::vector<Count>>& counts) {
    const auto xi = tensor.schema.require_all(tensor.x);
    const auto yi = tensor.schema.require_all(tensor.y);
    const auto zi = tensor.schema.require_all(tensor.z);
    Bag out(tensor.schema);
    Tuple full(tensor.schema.size(), 0);
    for (std::size_t s = 0; s < tensor.z_values.size(); ++s) {
        for (std::size_t k = 0; k < zi.size(); ++k) full[zi[k]] = tensor.z_values[s][k];
        for (std::size_t i = 0; i < tensor.x_values.size(); ++i) {
            for (std::size_t k = 0; k < xi.size(); ++k) full[xi[k]] = tensor.x_values[i][k];
            for (std::size_t j = 0; j < tensor.y_values.size(); ++j) {
                const Count c = counts[s][i * tensor.y_values.size() + j];
                if (c <= 0) continue;
                for (std::size_t k = 0; k < yi.size(); ++k) full[yi[k]] = tensor.y_values[j][k];
                out.add(full, c);
            }
        }
    }
    return out;
}

struct NmfOutcome {
    std::vector<double> u;
    std::vector<double> v;
    bool converged = false;
};

// Rank-one multiplicative updates on the stratum counts, started from the
// marginal (coupling) factors. Zero factor entries are fixed points of the
// update, which keeps empty rows and columns empty.
NmfOutcome nmf_rank_one(const std::vector<Count>& cells, std::size_t rows, std::size_t cols,
                        std::size_t iters, std::optional<std::uint64_t> seed) {
    NmfOutcome out;
    out.u.assign(rows, 0.0);
    out.v.assign(cols, 0.0);
    Count total = 0;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const Count c = cells[i * cols + j];
            out.u[i] += static_cast<double>(c);
            out.v[j] += static_cast<double>(c);
            total += c;
        }
    }
    if (total == 0) {
        out.converged = true;
        return out;
    }
    for (double& vj : out.v) vj /= static_cast<double>(total);
    if (seed) {
        DetRng rng(*seed);
        for (double& ui : out.u) ui *= 1.0 + (rng.unit() - 0.5) / 16.0;
        for (double& vj : out.v) vj *= 1.0 + (rng.unit() - 0.5) / 16.0;
    }

    auto squared_error = [&] {
        double err = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < cols; ++j) {
                const double d = static_cast<double>(cells[i * cols + j]) - out.u[i] * out.v[j];
                err += d * d;
            }
        }
        return err;
    };

    double previous = squared_error();
    for (std::size_t iter = 0; iter < iters; ++iter) {
        double vv = 0.0;
        for (double vj : out.v) vv += vj * vj;
        if (vv == 0.0) break;
        for (std::size_t i = 0; i < rows; ++i) {
            if (out.u[i] == 0.0) continue;
            double mv = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
                mv += static_cast<double>(cells[i * cols + j]) * out.v[j];
            }
            out.u[i] = mv / vv;
        }
        double uu = 0.0;
        for (double ui : out.u) uu += ui * ui;
        if (uu == 0.0) break;
        for (std::size_t j = 0; j < cols; ++j) {
            if (out.v[j] == 0.0) continue;
            double mu = 0.0;
            for (std::size_t i = 0; i < rows; ++i) {
                mu += static_cast<double>(cells[i * cols + j]) * out.u[i];
            }
            out.v[j] = mu / uu;
        }
        const double current = squared_error();
        if (previous - current <= 1e-12 * std::max(previous, 1.0)) {
            out.converged = true;
            return out;
        }
        previous = current;
    }
    out.converged = false;
    return out;
}

void run_strata(std::size_t jobs, std::size_t threads, const std::function<void(std::size_t)>& work) {
    const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), std::max<std::size_t>(jobs, 1));
    if (workers <= 1) {
        for (std::size_t s = 0; s < jobs; ++s) work(s);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex failure_lock;
    std::exception_ptr failure;
    auto worker = [&] {
        for (;;) {
            const std::size_t s = next.fetch_add(1);
            if (s >= jobs) return;
            try {
                work(s);
            } catch (...) {
                const std::lock_guard<std::mutex> hold(failure_lock);
                if (!failure) failure = std::current_exception();
                next.store(jobs);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

Count ContingencyTensor::stratum_total(std::size_t stratum) const {
    Count total = 0;
    for (Count c : counts.at(stratum)) total += c;
    return total;
}

ContingencyTensor build_tensor(const Bag& bag, const CiStatement& ci, std::size_t cap) {
    ci.validate(bag.schema());
    if (!ci.saturated(bag.schema())) {
        throw ValidationError("contingency tensors need a saturated statement");
    }
    const Schema& schema = bag.schema();
    const auto xi = schema.require_all(ci.x);
    const auto yi = schema.require_all(ci.y);
    const auto zi = schema.require_all(ci.z);

    const BigInt cells = combination_count(schema, xi) * combination_count(schema, yi) *
                         combination_count(schema, zi);
    if (cells > cap) {
        throw CapacityError("contingency tensor exceeds the cell cap",
                            cells > BigInt(UINT64_MAX) ? UINT64_MAX
                                                       : cells.convert_to<unsigned long long>());
    }

    ContingencyTensor tensor;
    tensor.schema = schema;
    tensor.x = ci.x;
    tensor.y = ci.y;
    tensor.z = ci.z;
    tensor.x_values = cross_product(schema, xi);
    tensor.y_values = cross_product(schema, yi);
    tensor.z_values = cross_product(schema, zi);
    tensor.counts.assign(tensor.z_values.size(),
                         std::vector<Count>(tensor.x_values.size() * tensor.y_values.size(), 0));

    const auto x_index = index_map(tensor.x_values);
    const auto y_index = index_map(tensor.y_values);
    const auto z_index = index_map(tensor.z_values);
    for (const auto& [t, mult] : bag.rows()) {
        const std::size_t i = x_index.at(pick(t, xi));
        const std::size_t j = y_index.at(pick(t, yi));
        const std::size_t s = z_index.at(pick(t, zi));
        tensor.counts[s][i * tensor.y_values.size() + j] += mult;
    }
    return tensor;
}

RatMatrix stratum_matrix(const ContingencyTensor& tensor, std::size_t stratum) {
    const std::size_t cols = tensor.y_values.size();
    RatMatrix out(tensor.x_values.size(), std::vector<Rat>(cols, Rat(0)));
    for (std::size_t i = 0; i < tensor.x_values.size(); ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            out[i][j] = Rat(tensor.counts.at(stratum)[i * cols + j]);
        }
    }
    return out;
}

RatMatrix coupling_matrix(const ContingencyTensor& tensor, std::size_t stratum) {
    const std::size_t cols = tensor.y_values.size();
    const std::size_t rows = tensor.x_values.size();
    std::vector<Count> row_sum(rows, 0);
    std::vector<Count> col_sum(cols, 0);
    Count total = 0;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const Count c = tensor.counts.at(stratum)[i * cols + j];
            row_sum[i] += c;
            col_sum[j] += c;
            total += c;
        }
    }
    RatMatrix out(rows, std::vector<Rat>(cols, Rat(0)));
    if (total == 0) return out;
    for (std::size_t i = 0; i < rows; ++i) {
        if (row_sum[i] == 0) continue;
        for (std::size_t j = 0; j < cols; ++j) {
            if (col_sum[j] == 0) continue;
            out[i][j] = Rat{BigInt(row_sum[i]) * BigInt(col_sum[j]), BigInt(total)};
        }
    }
    return out;
}

bool is_rank_one(const RatMatrix& matrix, const Rat& tolerance) {
    if (tolerance < 0) throw ValidationError("tolerance must be non-negative");
    const std::size_t rows = matrix.size();
    const std::size_t cols = rows == 0 ? 0 : matrix[0].size();
    for (const auto& row : matrix) {
        if (row.size() != cols) throw ValidationError("rank check needs a rectangular matrix");
    }
    for (std::size_t i1 = 0; i1 + 1 < rows; ++i1) {
        for (std::size_t i2 = i1 + 1; i2 < rows; ++i2) {
            for (std::size_t j1 = 0; j1 + 1 < cols; ++j1) {
                for (std::size_t j2 = j1 + 1; j2 < cols; ++j2) {
                    const Rat minor =
                        matrix[i1][j1] * matrix[i2][j2] - matrix[i1][j2] * matrix[i2][j1];
                    if (rat_abs(minor) > tolerance) return false;
                }
            }
        }
    }
    return true;
}

Bag independent_coupling(const ContingencyTensor& tensor, Count scale_cap) {
    return bag_from_counts(tensor, integerize_coupled(tensor, scale_cap).counts);
}

std::string tensor_to_json(const ContingencyTensor& tensor) {
    using nlohmann::json;
    const auto xi = tensor.schema.require_all(tensor.x);
    const auto yi = tensor.schema.require_all(tensor.y);
    const auto zi = tensor.schema.require_all(tensor.z);
    auto labels = [&](const std::vector<std::size_t>& idx, const Tuple& t) {
        json row = json::array();
        for (std::size_t k = 0; k < idx.size(); ++k) {
            row.push_back(tensor.schema.at(idx[k]).domain[t[k]]);
        }
        return row;
    };

    json doc;
    doc["x"] = tensor.x;
    doc["y"] = tensor.y;
    doc["z"] = tensor.z;
    doc["x_values"] = json::array();
    for (const Tuple& t : tensor.x_values) doc["x_values"].push_back(labels(xi, t));
    doc["y_values"] = json::array();
    for (const Tuple& t : tensor.y_values) doc["y_values"].push_back(labels(yi, t));
    doc["strata"] = json::array();
    for (std::size_t s = 0; s < tensor.z_values.size(); ++s) {
        json matrix = json::array();
        for (std::size_t i = 0; i < tensor.x_values.size(); ++i) {
            json row = json::array();
            for (std::size_t j = 0; j < tensor.y_values.size(); ++j) {
                row.push_back(tensor.counts[s][i * tensor.y_values.size() + j]);
            }
            matrix.push_back(row);
        }
        doc["strata"].push_back({{"z", labels(zi, tensor.z_values[s])}, {"matrix", matrix}});
    }
    return doc.dump(2);
}

RepairResult factorize_repair(const Bag& bag, const CiStatement& ci,
                              const FactorizeOptions& options) {
    const ContingencyTensor tensor = build_tensor(bag, ci, options.tensor_cap);

    IntegerizedStrata integer;
    bool faithful = true;
    bool converged_all = true;
    if (options.method == FactorizeMethod::kIndependentCoupling) {
        integer = integerize_coupled(tensor, options.scale_cap);
        faithful = integer.exact;
    } else {
        const std::size_t rows = tensor.x_values.size();
        const std::size_t cols = tensor.y_values.size();
        integer.scale = kNmfScale;
        integer.exact = false;
        integer.counts.assign(tensor.z_values.size(), {});
        std::vector<char> converged(tensor.z_values.size(), 0);
        run_strata(tensor.z_values.size(), options.threads, [&](std::size_t s) {
            const std::optional<std::uint64_t> stratum_seed =
                options.seed ? std::optional<std::uint64_t>(derive_seed(*options.seed, s))
                             : std::nullopt;
            const NmfOutcome nmf =
                nmf_rank_one(tensor.counts[s], rows, cols, options.nmf_iters, stratum_seed);
            converged[s] = nmf.converged ? 1 : 0;
            std::vector<Rat> weights;
            weights.reserve(rows * cols);
            for (std::size_t i = 0; i < rows; ++i) {
                for (std::size_t j = 0; j < cols; ++j) {
                    weights.emplace_back(Rat(nmf.u[i]) * Rat(nmf.v[j]));
                }
            }
            integer.counts[s] =
                largest_remainder(weights, tensor.stratum_total(s) * kNmfScale);
        });
        for (char flag : converged) converged_all = converged_all && flag != 0;
        faithful = faithful && converged_all;
    }

    RepairResult result(bag_from_counts(tensor, integer.counts), Bag(bag.schema()),
                        Bag(bag.schema()));
    const Bag original_scaled = scale(bag, integer.scale);
    split_difference(original_scaled, result.repaired, result.inserted, result.deleted);
    result.delta = result.inserted.total() + result.deleted.total();
    result.scale = integer.scale;
    result.optimal = faithful;
    result.solver_optimal = converged_all;
    result.l1 = l1_distance(bag, result.repaired);
    return result;
}

}  // namespace fairrep
