#include "fairrep/schema.hpp"

#include <sstream>

namespace fairrep {

Schema::Schema(std::vector<Attribute> attrs) : attrs_(std::move(attrs)) {
    for (std::size_t i = 0; i < attrs_.size(); ++i) {
        const Attribute& a = attrs_[i];
        if (a.name.empty()) {
            throw ValidationError("schema: empty attribute name at position " + std::to_string(i));
        }
        if (a.domain.empty()) {
            throw ValidationError("schema: attribute '" + a.name + "' has an empty domain");
        }
        if (!index_.emplace(a.name, i).second) {
            throw ValidationError("schema: duplicate attribute name '" + a.name + "'");
        }
    }
}

std::optional<std::size_t> Schema::index_of(std::string_view name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t Schema::require(std::string_view name) const {
    auto idx = index_of(name);
    if (!idx) throw ValidationError("unknown attribute '" + std::string(name) + "'");
    return *idx;
}

std::vector<std::size_t> Schema::require_all(const std::vector<std::string>& names) const {
    std::vector<std::size_t> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(require(n));
    return out;
}

void Schema::check_tuple(const Tuple& t) const {
    if (t.size() != attrs_.size()) {
        throw ValidationError("tuple arity " + std::to_string(t.size()) +
                              " does not match schema arity " + std::to_string(attrs_.size()));
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] >= attrs_[i].domain.size()) {
            throw ValidationError("tuple value index " + std::to_string(t[i]) +
                                  " outside domain of attribute '" + attrs_[i].name + "'");
        }
    }
}

Cat Schema::require_category(std::size_t attr_idx, std::string_view label) const {
    const Attribute& a = attrs_.at(attr_idx);
    for (std::size_t c = 0; c < a.domain.size(); ++c) {
        if (a.domain[c] == label) return static_cast<Cat>(c);
    }
    throw ValidationError("value '" + std::string(label) + "' outside declared domain of attribute '" +
                          a.name + "'");
}

std::string Schema::render_tuple(const Tuple& t) const {
    std::ostringstream os;
    for (std::size_t i = 0; i < t.size() && i < attrs_.size(); ++i) {
        if (i) os << ',';
        os << attrs_[i].domain[t[i]];
    }
    return os.str();
}

bool Schema::operator==(const Schema& other) const {
    if (attrs_.size() != other.attrs_.size()) return false;
    for (std::size_t i = 0; i < attrs_.size(); ++i) {
        if (attrs_[i].name != other.attrs_[i].name) return false;
        if (attrs_[i].domain != other.attrs_[i].domain) return false;
    }
    return true;
}

}  // namespace fairrep
