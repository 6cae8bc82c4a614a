#pragma once

// Contingency tensors over conditioning strata and the factorization repair
// backends. Independent coupling replaces each stratum by the product of its
// marginals (exact, rational); rank-one NMF refines the Frobenius distance
// with multiplicative updates. Both decode back into integer-count bags.

#include "fairrep/independence.hpp"
#include "fairrep/repair.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fairrep {

// Largest number of cells (|x| * |y| * |z| value combinations) a tensor may
// hold before construction refuses.
inline constexpr std::size_t kDefaultTensorCap = std::size_t{1} << 22;

// Ceiling for the exact common-denominator rescaling of coupled strata.
// Above it the repair falls back to this scale with per-stratum
// largest-remainder rounding, and the result is no longer exactly coupled.
inline constexpr Count kDefaultScaleCap = 1'000'000;

// NMF factors are irrational, so their bags are always quantized at this
// fixed scale, largest-remainder rounded per stratum.
inline constexpr Count kNmfScale = 1000;

// Row-major stratum matrix: entry [i][j] pairs the i-th x-value with the
// j-th y-value.
using RatMatrix = std::vector<std::vector<Rat>>;

struct ContingencyTensor {
    Schema schema;               // schema of the source bag
    std::vector<std::string> x;  // attribute names, as given in the statement
    std::vector<std::string> y;
    std::vector<std::string> z;
    // Full cross products of the attribute domains, odometer order (last
    // attribute fastest). Zero-count combinations are represented.
    std::vector<Tuple> x_values;
    std::vector<Tuple> y_values;
    std::vector<Tuple> z_values;
    // counts[s][i * y_values.size() + j] = multiplicity of (x_i, y_j, z_s).
    std::vector<std::vector<Count>> counts;

    Count stratum_total(std::size_t stratum) const;
};

// Exact per-stratum counts of the bag under the statement's partition.
// The statement must be saturated.
ContingencyTensor build_tensor(const Bag& bag, const CiStatement& ci,
                               std::size_t cap = kDefaultTensorCap);

// The stratum's counts as a rational matrix.
RatMatrix stratum_matrix(const ContingencyTensor& tensor, std::size_t stratum);

// Product of the stratum's marginals over its total: entry (i, j) is
// rowsum_i * colsum_j / total. A zero stratum comes back unchanged.
RatMatrix coupling_matrix(const ContingencyTensor& tensor, std::size_t stratum);

// Every 2x2 minor (all row and column pairs, not just adjacent ones) has
// absolute value at most `tolerance`. Zero and single-line matrices pass.
bool is_rank_one(const RatMatrix& matrix, const Rat& tolerance = Rat(0));

// Rebuilds a bag whose strata are the coupling matrices. Counts are scaled
// by the least common denominator of all coupled entries when that stays
// within `scale_cap` (the empirical distribution is then exactly the coupled
// one); otherwise by `scale_cap` itself with largest-remainder rounding.
Bag independent_coupling(const ContingencyTensor& tensor, Count scale_cap = kDefaultScaleCap);

// JSON dump for golden tests and debugging: attribute names, value labels,
// and one {"z": [...], "matrix": [[...]]} object per stratum.
std::string tensor_to_json(const ContingencyTensor& tensor);

enum class FactorizeMethod {
    kIndependentCoupling,
    kNmf,
};

struct FactorizeOptions {
    FactorizeMethod method = FactorizeMethod::kIndependentCoupling;
    // Multiplicative-update iterations per stratum before giving up.
    std::size_t nmf_iters = 500;
    // Jitters the NMF starting point (multiplicatively, small) when set;
    // unset starts exactly from the coupling marginals.
    std::optional<std::uint64_t> seed;
    Count scale_cap = kDefaultScaleCap;
    std::size_t tensor_cap = kDefaultTensorCap;
    std::size_t threads = 1;
};

// Algorithm: factorize each stratum matrix into a rank-one product, rebuild
// counts at a common scale, and report the delta against the original scaled
// to match. The optimal flag means the factorization is faithful: exact
// integerization for coupling, per-stratum convergence for NMF.
RepairResult factorize_repair(const Bag& bag, const CiStatement& ci,
                              const FactorizeOptions& options = {});

}  // namespace fairrep
