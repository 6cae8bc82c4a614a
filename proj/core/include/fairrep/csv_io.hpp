#pragma once

// Flat-file ingestion and serialization for bags.
//
// Format: ordinary CSV, header row naming the attributes. Cells are opaque
// category labels. A reserved `__count` column, when present, carries the
// multiplicity of the row; it may be a positive integer or a rational "p/q".
// Rational counts are brought to a common denominator and rescaled to
// integers. Decimal notation is rejected, as are cells that parse fully as
// floating-point numbers: continuous attributes must be binned upstream.
//
// Domains are inferred from the observed values (sorted) unless a sidecar
// JSON document declares them:
//   {"attributes": [{"name": "gender", "domain": ["female", "male"]}, ...]}
// Declared domains fix both membership and category order; values outside a
// declared domain are an error.

#include "fairrep/bag.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace fairrep {

Bag read_csv(std::istream& in, const std::optional<std::string>& sidecar_json = std::nullopt);
Bag read_csv_file(const std::filesystem::path& csv,
                  const std::optional<std::filesystem::path>& sidecar = std::nullopt);

// Rows come out sorted by schema attribute order then category index, with a
// trailing `__count` column, so output is deterministic and diff-friendly.
void write_csv(std::ostream& out, const Bag& bag);
void write_csv_file(const std::filesystem::path& path, const Bag& bag);

}  // namespace fairrep
