#pragma once
// Line-oriented model files:
//
//   [chart]              coords = x, y / box = -1, 1; -1, 1 / disk = cx, cy, r / basepoint = ...
//   [volume NAME]        rho = expr
//   [metric NAME]        g = g11, g12; g21, g22
//   [connection NAME]    Gamma k i j = expr (indices 1-based or coordinate names), from_metric = NAME
//   [oneform NAME]       components = e1, e2
//   [field NAME]         components = x1, x2
//   [function NAME]      expr = ...
//   [operator NAME]      kind = volume|metric|affine|sdensity|perturbed|blackbox, plus references
//   [loop NAME]          path = c1(t), c2(t) / segments = 8
//   [config]             seed, tol, points, fields, functions, resolution
//
// '#' starts a comment. Every error carries the 1-based line it refers to.

#include <divkit/divops.hpp>
#include <divkit/errors.hpp>
#include <divkit/expr.hpp>
#include <divkit/geometry.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace divkit {

struct SpecConfig {
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    std::optional<std::size_t> points;
    std::optional<std::size_t> fields;
    std::optional<std::size_t> functions;
    std::optional<int> resolution;
};

struct SpecFile {
    ChartRef chart;
    std::map<std::string, VolumeForm> volumes;
    std::map<std::string, Metric> metrics;
    std::map<std::string, Connection> connections;
    std::map<std::string, OneForm> oneforms;
    std::map<std::string, VectorField> fields;
    std::map<std::string, Expr> functions;
    std::map<std::string, DivOperator> operators;
    std::map<std::string, Path> loops;
    SpecConfig config;

    const DivOperator& op(const std::string& name) const { return lookup(operators, name, "operator"); }
    const VolumeForm& volume(const std::string& name) const { return lookup(volumes, name, "volume"); }
    const Connection& connection(const std::string& name) const { return lookup(connections, name, "connection"); }
    const VectorField& field(const std::string& name) const { return lookup(fields, name, "field"); }

private:
    template <class M>
    static const typename M::mapped_type& lookup(const M& m, const std::string& name, const char* what) {
        if (name.empty()) throw ValidationError(std::string("missing ") + what + " name", 0);
        auto it = m.find(name);
        if (it == m.end()) throw ValidationError(std::string("unknown ") + what + " '" + name + "'", 0);
        return it->second;
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

struct SpecLine {
    std::size_t line;
    std::string key;
    std::string value;
};

struct RawSection {
    std::size_t line;
    std::string type;
    std::string name;
    std::vector<SpecLine> entries;

    const SpecLine* find(std::string_view key) const {
        const SpecLine* hit = nullptr;
        for (const auto& e : entries)
            if (e.key == key) {
                if (hit) throw ValidationError("duplicate key '" + e.key + "'", e.line);
                hit = &e;
            }
        return hit;
    }

    const SpecLine& require(std::string_view key) const {
        if (const SpecLine* e = find(key)) return *e;
        throw ValidationError("[" + type + (name.empty() ? "" : " " + name) + "] needs '" + std::string(key) + "'",
                              line);
    }
};

inline double parse_real(const std::string& text, std::size_t line) {
    double v = 0.0;
    const char* b = text.data();
    const char* e = b + text.size();
    if (b != e && *b == '+') ++b;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e || text.empty()) throw ValidationError("expected a number, got '" + text + "'", line);
    return v;
}

inline std::uint64_t parse_count(const std::string& text, std::size_t line) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
        throw ValidationError("expected a non-negative integer, got '" + text + "'", line);
    return v;
}

inline std::vector<double> parse_reals(const std::string& text, std::size_t line) {
    std::vector<double> out;
    for (const auto& s : split(text, ',')) out.push_back(parse_real(s, line));
    return out;
}

inline std::vector<RawSection> lex_spec(std::string_view text) {
    std::vector<RawSection> sections;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
        const std::string s = trim(raw);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ValidationError("unterminated section header", line);
            const std::string inner = trim(std::string_view(s).substr(1, s.size() - 2));
            const auto space = inner.find_first_of(" \t");
            RawSection sec{line, inner.substr(0, space), space == std::string::npos ? "" : trim(inner.substr(space)), {}};
            if (sec.type.empty()) throw ValidationError("empty section header", line);
            sections.push_back(std::move(sec));
            continue;
        }
        if (sections.empty()) throw ValidationError("entry outside of any section", line);
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ValidationError("expected 'key = value'", line);
        sections.back().entries.push_back({line, trim(std::string_view(s).substr(0, eq)), trim(std::string_view(s).substr(eq + 1))});
    }
    return sections;
}

class SpecBuilder {
public:
    explicit SpecBuilder(std::vector<RawSection> sections) : sections_(std::move(sections)) {}

    SpecFile build() {
        build_chart();
        for (const auto& sec : sections_) {
            if (sec.type == "chart") continue;
            if (sec.type == "config") {
                build_config(sec);
                continue;
            }
            if (sec.name.empty()) throw ValidationError("[" + sec.type + "] needs a name", sec.line);
            if (!names_[sec.type].insert(sec.name).second)
                throw ValidationError("duplicate [" + sec.type + " " + sec.name + "]", sec.line);
            if (sec.type == "volume")
                build_volume(sec);
            else if (sec.type == "metric")
                build_metric(sec);
            else if (sec.type == "oneform")
                spec_.oneforms.emplace(sec.name, OneForm(spec_.chart, components(sec.require("components"))));
            else if (sec.type == "field")
                spec_.fields.emplace(sec.name, VectorField(spec_.chart, components(sec.require("components"))));
            else if (sec.type == "function")
                spec_.functions.emplace(sec.name, expr(sec.require("expr")));
            else if (sec.type == "loop")
                build_loop(sec);
            else if (sec.type == "connection" || sec.type == "operator")
                ;  // after metrics and volumes are known
            else
                throw ValidationError("unknown section type '" + sec.type + "'", sec.line);
        }
        for (const auto& sec : sections_)
            if (sec.type == "connection") build_connection(sec);
        for (const auto& sec : sections_)
            if (sec.type == "operator") resolve_operator(sec.name);
        return std::move(spec_);
    }

private:
    void build_chart() {
        const RawSection* chart = nullptr;
        for (const auto& sec : sections_)
            if (sec.type == "chart") {
                if (chart) throw ValidationError("duplicate [chart] section", sec.line);
                chart = &sec;
            }
        if (!chart) throw ValidationError("missing [chart] section", 0);
        const SpecLine& coords_line = chart->require("coords");
        std::vector<std::string> coords = split(coords_line.value, ',');
        const SpecLine& box_line = chart->require("box");
        Point lo, hi;
        for (const auto& row : split(box_line.value, ';')) {
            const auto ab = parse_reals(row, box_line.line);
            if (ab.size() != 2) throw ValidationError("box rows are 'lo, hi'", box_line.line);
            lo.push_back(ab[0]);
            hi.push_back(ab[1]);
        }
        std::vector<Disk> disks;
        for (const auto& e : chart->entries)
            if (e.key == "disk") {
                auto v = parse_reals(e.value, e.line);
                if (v.size() != coords.size() + 1) throw ValidationError("disk is 'center..., radius'", e.line);
                const double r = v.back();
                v.pop_back();
                disks.push_back({v, r});
            } else if (e.key != "coords" && e.key != "box" && e.key != "basepoint") {
                throw ValidationError("unknown chart key '" + e.key + "'", e.line);
            }
        std::optional<Point> base;
        if (const SpecLine* b = chart->find("basepoint")) base = parse_reals(b->value, b->line);
        try {
            spec_.chart = make_chart(std::move(coords), std::move(lo), std::move(hi), std::move(disks), std::move(base));
        } catch (const ValidationError& e) {
            throw ValidationError(e.what(), chart->line);
        }
    }

    Expr expr(const SpecLine& e) const {
        try {
            return spec_.chart->parse(e.value);
        } catch (const ParseError& err) {
            throw ValidationError(err.what(), e.line);
        }
    }

    std::vector<Expr> components(const SpecLine& e) const {
        std::vector<Expr> out;
        for (const auto& part : split(e.value, ',')) out.push_back(expr({e.line, e.key, part}));
        if (out.size() != spec_.chart->dim())
            throw ValidationError("expected " + std::to_string(spec_.chart->dim()) + " components", e.line);
        return out;
    }

    void build_config(const RawSection& sec) {
        for (const auto& e : sec.entries) {
            if (e.key == "seed")
                spec_.config.seed = parse_count(e.value, e.line);
            else if (e.key == "tol")
                spec_.config.tol = parse_real(e.value, e.line);
            else if (e.key == "points")
                spec_.config.points = parse_count(e.value, e.line);
            else if (e.key == "fields")
                spec_.config.fields = parse_count(e.value, e.line);
            else if (e.key == "functions")
                spec_.config.functions = parse_count(e.value, e.line);
            else if (e.key == "resolution")
                spec_.config.resolution = static_cast<int>(parse_count(e.value, e.line));
            else
                throw ValidationError("unknown config key '" + e.key + "'", e.line);
        }
    }

    void build_volume(const RawSection& sec) {
        const SpecLine& rho = sec.require("rho");
        try {
            spec_.volumes.emplace(sec.name, VolumeForm(spec_.chart, expr(rho)));
        } catch (const ValidationError& e) {
            if (e.line()) throw;
            throw ValidationError(e.what(), rho.line);
        }
    }

    void build_metric(const RawSection& sec) {
        const SpecLine& g = sec.require("g");
        ExprMatrix m;
        for (const auto& row : split(g.value, ';')) {
            std::vector<Expr> r;
            for (const auto& part : split(row, ',')) r.push_back(expr({g.line, g.key, part}));
            m.push_back(std::move(r));
        }
        try {
            spec_.metrics.emplace(sec.name, Metric(spec_.chart, std::move(m)));
        } catch (const ValidationError& e) {
            if (e.line()) throw;
            throw ValidationError(e.what(), g.line);
        }
    }

    std::size_t index_of(const std::string& token, std::size_t line) const {
        const auto& names = spec_.chart->coordinates();
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == token) return i;
        const auto k = parse_count(token, line);
        if (k < 1 || k > names.size()) throw ValidationError("index '" + token + "' out of range", line);
        return static_cast<std::size_t>(k - 1);
    }

    void build_connection(const RawSection& sec) {
        Connection gamma(spec_.chart);
        if (const SpecLine* from = sec.find("from_metric")) {
            auto it = spec_.metrics.find(from->value);
            if (it == spec_.metrics.end()) throw ValidationError("unknown metric '" + from->value + "'", from->line);
            try {
                gamma = levi_civita(it->second);
            } catch (const Error& e) {
                throw ValidationError(e.what(), from->line);
            }
        }
        for (const auto& e : sec.entries) {
            if (e.key == "from_metric") continue;
            std::istringstream words(e.key);
            std::string head, k, i, j, extra;
            words >> head >> k >> i >> j;
            if (head != "Gamma" || j.empty() || (words >> extra))
                throw ValidationError("expected 'Gamma k i j = expr'", e.line);
            gamma(index_of(k, e.line), index_of(i, e.line), index_of(j, e.line)) = expr(e);
        }
        spec_.connections.emplace(sec.name, std::move(gamma));
    }

    void build_loop(const RawSection& sec) {
        const SpecLine& path = sec.require("path");
        int segments = 8;
        if (const SpecLine* s = sec.find("segments")) segments = static_cast<int>(parse_count(s->value, s->line));
        try {
            Path loop = Path::parse(spec_.chart, split(path.value, ','), segments);
            const Point a = loop.at(0.0), b = loop.at(1.0);
            for (std::size_t i = 0; i < a.size(); ++i)
                if (std::abs(a[i] - b[i]) > 1e-12) throw ValidationError("loop is not closed", path.line);
            spec_.loops.emplace(sec.name, std::move(loop));
        } catch (const ParseError& e) {
            throw ValidationError(e.what(), path.line);
        } catch (const PreconditionError& e) {
            throw ValidationError(e.what(), path.line);
        }
    }

    const RawSection& operator_section(const std::string& name, std::size_t line) const {
        for (const auto& sec : sections_)
            if (sec.type == "operator" && sec.name == name) return sec;
        throw ValidationError("unknown operator '" + name + "'", line);
    }

    template <class M>
    const typename M::mapped_type& ref(const M& m, const SpecLine& e, const char* what) const {
        auto it = m.find(e.value);
        if (it == m.end()) throw ValidationError(std::string("unknown ") + what + " '" + e.value + "'", e.line);
        return it->second;
    }

    const DivOperator& resolve_operator(const std::string& name, std::size_t line = 0) {
        if (auto it = spec_.operators.find(name); it != spec_.operators.end()) return it->second;
        const RawSection& sec = operator_section(name, line);
        if (!visiting_.insert(name).second) throw ValidationError("operator '" + name + "' refers to itself", sec.line);
        const SpecLine& kind = sec.require("kind");
        std::optional<DivOperator> op;
        try {
            if (kind.value == "volume") {
                op = DivOperator::volume(ref(spec_.volumes, sec.require("volume"), "volume"));
            } else if (kind.value == "metric") {
                op = DivOperator::metric(ref(spec_.metrics, sec.require("metric"), "metric"));
            } else if (kind.value == "affine") {
                op = DivOperator::affine(ref(spec_.connections, sec.require("connection"), "connection"));
            } else if (kind.value == "sdensity") {
                const SpecLine& s = sec.require("s");
                Expr rho;
                if (const SpecLine* v = sec.find("volume"))
                    rho = ref(spec_.volumes, *v, "volume").density;
                else
                    rho = expr(sec.require("rho"));
                op = DivOperator::sdensity(spec_.chart, rho, parse_real(s.value, s.line));
            } else if (kind.value == "perturbed") {
                const SpecLine& base = sec.require("base");
                const DivOperator b = resolve_operator(base.value, base.line);
                op = DivOperator::perturbed(b, ref(spec_.oneforms, sec.require("oneform"), "oneform"));
            } else if (kind.value == "blackbox") {
                const SpecLine& inner = sec.require("wraps");
                const DivOperator wrapped = resolve_operator(inner.value, inner.line);
                if (!wrapped.is_symbolic()) throw ValidationError("blackbox must wrap a symbolic operator", inner.line);
                op = DivOperator::opaque(wrapped);
            } else {
                throw ValidationError("unknown operator kind '" + kind.value + "'", kind.line);
            }
        } catch (const ValidationError& e) {
            if (e.line()) throw;
            throw ValidationError(e.what(), sec.line);
        }
        visiting_.erase(name);
        return spec_.operators.emplace(name, std::move(*op)).first->second;
    }

    std::vector<RawSection> sections_;
    SpecFile spec_;
    std::map<std::string, std::set<std::string>> names_;
    std::set<std::string> visiting_;
};

}  // namespace detail

inline SpecFile parse_spec_text(std::string_view text) { return detail::SpecBuilder(detail::lex_spec(text)).build(); }

inline SpecFile parse_specfile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read spec file '" + path.string() + "'", 0);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_spec_text(buf.str());
}

}  // namespace divkit
