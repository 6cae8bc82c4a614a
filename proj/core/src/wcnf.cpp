#include "fairrep/wcnf.hpp"

#include "fairrep/error.hpp"

#include <fstream>
#include <sstream>

namespace fairrep {

long long WcnfProblem::top() const {
    long long sum = 0;
    for (const SoftClause& s : soft) sum += s.weight;
    return sum + 1;
}

void export_wcnf(const WcnfProblem& problem, std::ostream& sink) {
    for (std::size_t v = 1; v <= problem.num_vars; ++v) {
        sink << "c var " << v;
        if (v - 1 < problem.legend.size() && !problem.legend[v - 1].empty()) {
            sink << " = " << problem.legend[v - 1];
        }
        sink << '\n';
    }
    const long long top = problem.top();
    sink << "p wcnf " << problem.num_vars << ' ' << problem.hard.size() + problem.soft.size() << ' '
         << top << '\n';
    for (const auto& clause : problem.hard) {
        sink << top;
        for (int lit : clause) sink << ' ' << lit;
        sink << " 0\n";
    }
    for (const SoftClause& s : problem.soft) {
        sink << s.weight;
        for (int lit : s.literals) sink << ' ' << lit;
        sink << " 0\n";
    }
    if (!sink) throw ValidationError("failed writing wcnf output");
}

void export_wcnf_file(const WcnfProblem& problem, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open wcnf file for writing: " + path);
    export_wcnf(problem, out);
    if (!out.flush()) throw ValidationError("failed writing wcnf file: " + path);
}

WcnfProblem parse_wcnf(std::istream& source) {
    WcnfProblem problem;
    std::optional<long long> top;
    std::size_t declared_clauses = 0;
    std::string line;
    while (std::getline(source, line)) {
        if (line.empty() || line[0] == 'c') continue;
        std::istringstream in(line);
        if (line[0] == 'p') {
            std::string p, fmt;
            long long nv = 0, nc = 0, t = 0;
            in >> p >> fmt >> nv >> nc >> t;
            if (fmt != "wcnf" || nv < 0 || nc < 0 || t < 1 || !in) {
                throw ValidationError("wcnf: malformed problem line: " + line);
            }
            problem.num_vars = static_cast<std::size_t>(nv);
            declared_clauses = static_cast<std::size_t>(nc);
            top = t;
            continue;
        }
        if (!top) throw ValidationError("wcnf: clause before the problem line");
        long long weight = 0;
        if (!(in >> weight) || weight < 1) {
            throw ValidationError("wcnf: malformed clause line: " + line);
        }
        std::vector<int> lits;
        int lit = 0;
        while (in >> lit && lit != 0) {
            const std::size_t v = static_cast<std::size_t>(lit < 0 ? -lit : lit);
            if (v == 0 || v > problem.num_vars) {
                throw ValidationError("wcnf: literal outside declared variables: " + line);
            }
            lits.push_back(lit);
        }
        if (lit != 0) throw ValidationError("wcnf: clause line missing terminating 0: " + line);
        if (weight >= *top) {
            problem.hard.push_back(std::move(lits));
        } else {
            problem.soft.push_back({weight, std::move(lits)});
        }
    }
    if (!top) throw ValidationError("wcnf: missing problem line");
    if (problem.hard.size() + problem.soft.size() != declared_clauses) {
        throw ValidationError("wcnf: clause count disagrees with the problem line");
    }
    return problem;
}

std::optional<std::vector<bool>> parse_solver_output(const std::string& text, std::size_t num_vars,
                                                     bool* claims_optimal) {
    if (claims_optimal) *claims_optimal = false;
    std::vector<bool> model(num_vars, false);
    std::vector<bool> seen(num_vars, false);
    bool any = false;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.rfind("s ", 0) == 0) {
            if (claims_optimal && line.find("OPTIMUM FOUND") != std::string::npos) {
                *claims_optimal = true;
            }
            continue;
        }
        if (line.rfind("v ", 0) != 0) continue;
        const std::string body = line.substr(2);
        const bool binary_form =
            !body.empty() && body.find_first_not_of("01 \t\r") == std::string::npos &&
            body.find_first_of("01") != std::string::npos &&
            body.find(' ') == std::string::npos;
        if (binary_form) {
            for (std::size_t i = 0; i < body.size() && i < num_vars; ++i) {
                model[i] = body[i] == '1';
                seen[i] = true;
                any = true;
            }
            continue;
        }
        std::istringstream in(body);
        long long lit = 0;
        while (in >> lit) {
            if (lit == 0) continue;
            const std::size_t v = static_cast<std::size_t>(lit < 0 ? -lit : lit);
            if (v == 0 || v > num_vars) continue;
            model[v - 1] = lit > 0;
            seen[v - 1] = true;
            any = true;
        }
    }
    if (!any) return std::nullopt;
    for (std::size_t i = 0; i < num_vars; ++i) {
        if (!seen[i]) return std::nullopt;  // incomplete model
    }
    return model;
}

}  // namespace fairrep
