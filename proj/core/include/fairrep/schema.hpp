#pragma once

// Discrete tabular schemas. Attributes are named and carry an explicit finite
// category list; tuples store category indices (positions into the domain),
// one per attribute in schema order. Lexicographic comparison of tuples is
// therefore "attribute order, then category index", which is the canonical
// row order everywhere in the library.

#include "fairrep/error.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fairrep {

using Cat = std::uint32_t;
using Tuple = std::vector<Cat>;

struct Attribute {
    std::string name;
    std::vector<std::string> domain;
};

class Schema {
public:
    Schema() = default;
    explicit Schema(std::vector<Attribute> attrs);

    std::size_t size() const { return attrs_.size(); }
    const Attribute& at(std::size_t i) const { return attrs_[i]; }
    const std::vector<Attribute>& attributes() const { return attrs_; }

    std::optional<std::size_t> index_of(std::string_view name) const;
    // Throws ValidationError naming the attribute if absent.
    std::size_t require(std::string_view name) const;
    std::vector<std::size_t> require_all(const std::vector<std::string>& names) const;
    bool has(std::string_view name) const { return index_of(name).has_value(); }

    // Validates every coordinate against the attribute domains.
    void check_tuple(const Tuple& t) const;

    // Category index of `label` in attribute `attr_idx`, or error.
    Cat require_category(std::size_t attr_idx, std::string_view label) const;

    // Human-readable tuple rendering: "a,b,c" in attribute order.
    std::string render_tuple(const Tuple& t) const;

    bool operator==(const Schema& other) const;

private:
    std::vector<Attribute> attrs_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

}  // namespace fairrep
