#include "fairrep/csv_io.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace fairrep {

namespace {

using json = nlohmann::json;

// RFC 4180 style: quoted fields may contain commas, newlines and doubled
// quotes. Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>* fields) {
    fields->clear();
    int c = in.get();
    if (c == std::istream::traits_type::eof()) return false;

    std::string cell;
    bool quoted = false;
    while (true) {
        if (c == std::istream::traits_type::eof()) {
            if (quoted) throw ValidationError("csv: unterminated quoted field");
            break;
        }
        const char ch = static_cast<char>(c);
        if (quoted) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    cell.push_back('"');
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                cell.push_back(ch);
            }
        } else if (ch == '"' && cell.empty()) {
            quoted = true;
        } else if (ch == ',') {
            fields->push_back(std::move(cell));
            cell.clear();
        } else if (ch == '\n') {
            break;
        } else if (ch == '\r') {
            if (in.peek() == '\n') in.get();
            break;
        } else {
            cell.push_back(ch);
        }
        c = in.get();
    }
    fields->push_back(std::move(cell));
    return true;
}

void write_cell(std::ostream& out, const std::string& cell) {
    if (cell.find_first_of(",\"\n\r") == std::string::npos) {
        out << cell;
        return;
    }
    out << '"';
    for (char ch : cell) {
        if (ch == '"') out << '"';
        out << ch;
    }
    out << '"';
}

bool parses_as_integer(const std::string& s) {
    long long v = 0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [p, ec] = std::from_chars(first, last, v);
    return ec == std::errc() && p == last;
}

bool looks_like_float(const std::string& s) {
    if (s.empty() || parses_as_integer(s)) return false;
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && p == s.data() + s.size();
}

std::map<std::string, std::vector<std::string>, std::less<>> parse_sidecar(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("domain sidecar: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("attributes") || !doc["attributes"].is_array()) {
        throw ValidationError("domain sidecar: expected {\"attributes\": [...]}");
    }
    std::map<std::string, std::vector<std::string>, std::less<>> declared;
    for (const json& entry : doc["attributes"]) {
        if (!entry.is_object() || !entry.contains("name") || !entry.contains("domain") ||
            !entry["name"].is_string() || !entry["domain"].is_array()) {
            throw ValidationError("domain sidecar: each attribute needs a name and a domain list");
        }
        std::vector<std::string> domain;
        for (const json& label : entry["domain"]) {
            if (!label.is_string()) {
                throw ValidationError("domain sidecar: category labels must be strings");
            }
            domain.push_back(label.get<std::string>());
        }
        const std::string name = entry["name"].get<std::string>();
        if (!declared.emplace(name, std::move(domain)).second) {
            throw ValidationError("domain sidecar: attribute '" + name + "' declared twice");
        }
    }
    return declared;
}

}  // namespace

Bag read_csv(std::istream& in, const std::optional<std::string>& sidecar_json) {
    std::vector<std::string> header;
    if (!read_record(in, &header)) throw ValidationError("csv: missing header row");

    std::optional<std::size_t> count_col;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == kCountColumn) {
            if (count_col) throw ValidationError("csv: repeated __count column");
            count_col = i;
        } else if (header[i] == kKeyAttribute) {
            throw ValidationError("csv: '__key' is reserved for keyed encodings");
        } else {
            names.push_back(header[i]);
        }
    }

    struct RawRow {
        std::vector<std::string> cells;  // data cells only, header order
        Rat count;
    };
    std::vector<RawRow> raws;
    std::vector<std::string> record;
    BigInt common_den = 1;
    while (read_record(in, &record)) {
        if (record.size() == 1 && record[0].empty()) continue;  // blank line
        if (record.size() != header.size()) {
            throw ValidationError("csv: row " + std::to_string(raws.size() + 2) + " has " +
                                  std::to_string(record.size()) + " cells, header has " +
                                  std::to_string(header.size()));
        }
        RawRow raw;
        raw.count = 1;
        for (std::size_t i = 0; i < record.size(); ++i) {
            if (count_col && i == *count_col) {
                auto parsed = rat_from_string(record[i]);
                if (!parsed || *parsed <= 0) {
                    throw ValidationError("csv: __count value '" + record[i] +
                                          "' is not a positive integer or rational");
                }
                raw.count = *parsed;
            } else {
                if (looks_like_float(record[i])) {
                    throw ValidationError("csv: attribute '" + names[raw.cells.size()] +
                                          "' carries continuous value '" + record[i] +
                                          "'; bin continuous attributes before ingestion");
                }
                raw.cells.push_back(record[i]);
            }
        }
        common_den = lcm(common_den, denominator(raw.count));
        raws.push_back(std::move(raw));
    }

    // Domains: declared via sidecar where available, otherwise the sorted set
    // of observed values.
    std::map<std::string, std::vector<std::string>, std::less<>> declared;
    if (sidecar_json) declared = parse_sidecar(*sidecar_json);
    for (const auto& [name, domain] : declared) {
        if (std::find(names.begin(), names.end(), name) == names.end()) {
            throw ValidationError("domain sidecar: attribute '" + name + "' not present in the csv header");
        }
    }

    std::vector<Attribute> attrs;
    attrs.reserve(names.size());
    for (std::size_t a = 0; a < names.size(); ++a) {
        Attribute attr;
        attr.name = names[a];
        if (auto it = declared.find(names[a]); it != declared.end()) {
            attr.domain = it->second;
        } else {
            std::set<std::string> observed;
            for (const RawRow& raw : raws) observed.insert(raw.cells[a]);
            if (observed.empty()) {
                throw ValidationError("csv: no rows to infer a domain for attribute '" + names[a] +
                                      "'; declare it in a sidecar");
            }
            attr.domain.assign(observed.begin(), observed.end());
        }
        attrs.push_back(std::move(attr));
    }
    Schema schema(std::move(attrs));

    Bag bag(schema);
    for (const RawRow& raw : raws) {
        Tuple t;
        t.reserve(raw.cells.size());
        for (std::size_t a = 0; a < raw.cells.size(); ++a) {
            t.push_back(schema.require_category(a, raw.cells[a]));
        }
        const BigInt scaled = numerator(raw.count) * (common_den / denominator(raw.count));
        if (scaled > std::numeric_limits<Count>::max()) {
            throw ValidationError("csv: rescaled multiplicity exceeds the supported count range");
        }
        bag.add(t, scaled.convert_to<Count>());
    }
    return bag;
}

Bag read_csv_file(const std::filesystem::path& csv, const std::optional<std::filesystem::path>& sidecar) {
    std::ifstream in(csv, std::ios::binary);
    if (!in) throw ValidationError("cannot open csv file: " + csv.string());
    std::optional<std::string> sidecar_text;
    if (sidecar) {
        std::ifstream side(*sidecar, std::ios::binary);
        if (!side) throw ValidationError("cannot open domain sidecar: " + sidecar->string());
        std::ostringstream buf;
        buf << side.rdbuf();
        sidecar_text = buf.str();
    }
    return read_csv(in, sidecar_text);
}

void write_csv(std::ostream& out, const Bag& bag) {
    const Schema& schema = bag.schema();
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (i) out << ',';
        write_cell(out, schema.at(i).name);
    }
    if (schema.size()) out << ',';
    out << kCountColumn << '\n';
    for (const auto& [t, m] : bag.rows()) {
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (i) out << ',';
            write_cell(out, schema.at(i).domain[t[i]]);
        }
        if (t.size()) out << ',';
        out << m << '\n';
    }
}

void write_csv_file(const std::filesystem::path& path, const Bag& bag) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open csv file for writing: " + path.string());
    write_csv(out, bag);
    if (!out.flush()) throw ValidationError("failed writing csv file: " + path.string());
}

}  // namespace fairrep
