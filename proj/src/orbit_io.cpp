#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "hyperangle/errors.hpp"
#include "hyperangle/lattice.hpp"

namespace hyperangle {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, long line) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    while (e > b && (e[-1] == ' ' || e[-1] == '\t' || e[-1] == '\r')) --e;
    if (b < e && *b == '+') ++b;
    const auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc() || r.ptr != e || b == e)
        throw ParseError("cannot parse number '" + s + "'", line);
    return v;
}

// An integer multiple of 1/den that is small enough to be exact in a double.
bool exact_with(double v, std::int64_t den) {
    const double s = v * den;
    return std::fabs(s) < 9.0e15 && s == std::floor(s);
}

}  // namespace

OrbitDataset read_orbit(std::istream& in) {
    std::string line;
    long lineno = 0;
    if (!std::getline(in, line)) throw ParseError("missing orbit header", 1);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string magic = "#hyperangle orbit v1";
    if (line.rfind(magic, 0) != 0) throw ParseError("not a hyperangle orbit v1 file", lineno);
    std::map<std::string, std::string> meta;
    {
        std::istringstream hs(line.substr(magic.size()));
        std::string tok;
        while (hs >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) throw ParseError("malformed header field '" + tok + "'", lineno);
            meta[tok.substr(0, eq)] = tok.substr(eq + 1);
        }
    }
    for (const char* key : {"n", "q", "veff", "w", "source"})
        if (!meta.count(key)) throw ParseError(std::string("header lacks '") + key + "'", lineno);
    const double nd = parse_double(meta["n"], lineno);
    if (nd != std::floor(nd) || nd < 2) throw ParseError("header n must be an integer >= 2", lineno);
    const int n = static_cast<int>(nd);
    const double Q = parse_double(meta["q"], lineno);
    const double wd = parse_double(meta["w"], lineno);
    std::optional<double> veff;
    if (meta["veff"] != "na") veff = parse_double(meta["veff"], lineno);

    std::vector<double> coords;
    std::vector<long> rows;
    std::optional<Cone> cone;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("#cone ", 0) == 0) {
                std::istringstream cs(line.substr(6));
                std::string tok;
                std::vector<double> axis;
                double theta = 0.0;
                while (cs >> tok) {
                    if (tok.rfind("axis=", 0) == 0) {
                        std::stringstream as(tok.substr(5));
                        std::string part;
                        while (std::getline(as, part, ',')) axis.push_back(parse_double(part, lineno));
                    } else if (tok.rfind("theta=", 0) == 0) {
                        theta = parse_double(tok.substr(6), lineno);
                    }
                }
                cone = Cone(axis, theta);
            }
            continue;
        }
        std::stringstream ls(line);
        std::string field;
        int count = 0;
        while (std::getline(ls, field, ',')) {
            coords.push_back(parse_double(field, lineno));
            ++count;
        }
        if (count != n + 1)
            throw ParseError("row has " + std::to_string(count) + " fields, header n=" +
                                 std::to_string(n) + " requires " + std::to_string(n + 1),
                             lineno);
        rows.push_back(lineno);
        const double* p = coords.data() + coords.size() - (n + 1);
        double form = -p[n] * p[n], mag = p[n] * p[n];
        for (int j = 0; j < n; ++j) {
            form += p[j] * p[j];
            mag += p[j] * p[j];
        }
        if (!(std::fabs(form + 1.0) <= 1e-6 + 4 * std::numeric_limits<double>::epsilon() * mag) ||
            !(p[n] > 0.0))
            throw InvariantError("line " + std::to_string(lineno) + ": row is off the hyperboloid");
        if (p[n] > 0.5 * Q * Q * (1.0 + 1e-12))
            throw InvariantError("line " + std::to_string(lineno) + ": row exceeds the cutoff q");
    }

    // recover exact storage column by column (integers or half-integers)
    const std::size_t dim = n + 1, N = coords.size() / dim;
    std::vector<std::int64_t> denom(dim, 1);
    bool exact = N > 0;
    for (std::size_t j = 0; j < dim && exact; ++j) {
        std::int64_t den = 1;
        for (std::size_t i = 0; i < N; ++i) {
            const double v = coords[i * dim + j];
            if (den == 1 && !exact_with(v, 1)) den = 2;
            if (den == 2 && !exact_with(v, 2)) {
                exact = false;
                break;
            }
        }
        denom[j] = den;
    }
    std::vector<std::int64_t> nums;
    if (exact) {
        nums.resize(coords.size());
        for (std::size_t i = 0; i < N; ++i) {
            __int128 acc = 0;
            std::int64_t L = 1;
            for (std::size_t j = 0; j < dim; ++j) L = std::max(L, denom[j]);
            for (std::size_t j = 0; j < dim; ++j) {
                const std::int64_t v = static_cast<std::int64_t>(coords[i * dim + j] * denom[j]);
                nums[i * dim + j] = v;
                const __int128 scaled = static_cast<__int128>(v) * (L / denom[j]);
                acc += (j + 1 == dim ? -1 : 1) * scaled * scaled;
            }
            if (acc != -static_cast<__int128>(L) * L) {
                exact = false;
                break;
            }
        }
    }
    OrbitDataset ds;
    try {
        ds = exact ? make_dataset(n, Q, static_cast<std::int64_t>(wd), meta["source"], std::move(coords),
                                  std::move(nums), std::move(denom))
                   : make_dataset(n, Q, static_cast<std::int64_t>(wd), meta["source"], std::move(coords));
    } catch (const InvariantError& e) {
        throw InvariantError(std::string("orbit file: ") + e.what());
    }
    ds.V_eff = veff;
    ds.cone = cone;
    if (cone) {
        // cone files carry no base point by construction
        if (ds.base_index >= 0) throw InvariantError("cone-filtered file contains the base point");
    }
    return ds;
}

OrbitDataset load_orbit(const std::string& path, const std::string& format) {
    if (format != "csv-v1") throw UsageError("unsupported orbit format '" + format + "'");
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open orbit file '" + path + "'");
    return read_orbit(in);
}

void write_orbit(const OrbitDataset& ds, std::ostream& out) {
    out << "#hyperangle orbit v1 n=" << ds.n << " q=" << fmt17(ds.Q)
        << " veff=" << (ds.V_eff ? fmt17(*ds.V_eff) : std::string("na")) << " w=" << ds.w
        << " source=" << (ds.source.empty() ? std::string("unknown") : ds.source) << "\n";
    if (ds.cone) {
        out << "#cone axis=";
        for (std::size_t j = 0; j < ds.cone->axis.size(); ++j)
            out << (j ? "," : "") << fmt17(ds.cone->axis[j]);
        out << " theta=" << fmt17(ds.cone->theta) << "\n";
    }
    const std::size_t dim = ds.n + 1;
    std::string row;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        row.clear();
        for (std::size_t j = 0; j < dim; ++j) {
            if (j) row += ',';
            if (ds.is_exact() && ds.denom[j] == 1) row += std::to_string(ds.exact[i * dim + j]);
            else row += fmt17(ds.coords[i * dim + j]);
        }
        row += '\n';
        out << row;
    }
}

void save_orbit(const OrbitDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot write orbit file '" + path + "'");
    write_orbit(ds, out);
    if (!out) throw ResourceError("failed while writing '" + path + "'");
}

}  // namespace hyperangle
