#include "mra/datagen.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "mra/rng.hpp"

namespace mra {

void validate(const ObservationSet& obs) {
    if (obs.m() < 1) throw ShapeError("observation set is empty");
    if (obs.n() < 2) throw ShapeError("observation length must be at least 2");
    for (double v : obs.data.data())
        if (!std::isfinite(v)) throw ParameterError("observation sample is not finite");
    if (obs.true_shifts) {
        if (obs.true_shifts->size() != obs.m()) throw ShapeError("true_shifts length differs from m");
        for (std::size_t l : *obs.true_shifts)
            if (l >= obs.n()) throw ParameterError("true shift outside [0, n)");
    }
    if (obs.true_components) {
        if (obs.true_components->size() != obs.m() * obs.n())
            throw ShapeError("true_components size differs from m*n");
        for (auto k : *obs.true_components)
            if (k != 1 && k != 2) throw ParameterError("component label must be 1 or 2");
    }
}

Signal make_random_signal(std::size_t n, std::uint64_t seed) {
    if (n < 2) throw ParameterError("random signal length must be at least 2");
    std::vector<double> u(n);
    for (std::size_t j = 0; j < n; ++j) u[j] = rng::normal(seed, rng::kSignal, j);
    return Signal(std::move(u));
}

Signal make_piecewise_signal(std::size_t n) {
    if (n < 60) throw ParameterError("piecewise signal needs n >= 60");
    std::vector<double> u(n, 0.0);
    for (std::size_t j = 29; j < 60; ++j) u[j] = 1.0;
    return Signal(std::move(u));
}

double standard_noise_draw(std::uint64_t seed, std::size_t n, std::size_t i, std::size_t j) {
    return rng::normal(seed, rng::kNoise, i * n + j);
}

ObservationSet generate_observations(const Signal& u, const GenSpec& spec) {
    if (spec.m < 1) throw ParameterError("observation count must be positive");
    validate(spec.noise);
    const std::size_t n = u.size();
    const std::size_t m = spec.m;
    const double sd1 = std::sqrt(spec.noise.sigma1_sq);
    const double sd2 = std::sqrt(spec.noise.sigma2_sq);

    ObservationSet obs;
    obs.data = Matrix(m, n);
    obs.seed = spec.seed;
    obs.generating_noise = spec.noise;
    std::vector<std::size_t> shifts(m);
    std::vector<std::uint8_t> comps(m * n);

    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t l = rng::below(spec.seed, rng::kShifts, i, n);
        shifts[i] = l;
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t c = i * n + j;
            const bool first = rng::uniform(spec.seed, rng::kComponents, c) < spec.noise.alpha;
            comps[c] = first ? 1 : 2;
            const double z = rng::normal(spec.seed, rng::kNoise, c);
            obs.data(i, j) = u[(j + n - l) % n] + (first ? sd1 : sd2) * z;
        }
    }
    obs.true_shifts = std::move(shifts);
    obs.true_components = std::move(comps);
    return obs;
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) parts.push_back(cur);
    if (!line.empty() && line.back() == ',') parts.emplace_back();
    return parts;
}

double parse_double(const std::string& s, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParameterError("line " + std::to_string(line_no) + ": bad number '" + s + "'");
    }
}

std::uint64_t parse_u64(const std::string& s, std::size_t line_no) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ParameterError("line " + std::to_string(line_no) + ": bad integer '" + s + "'");
    return v;
}

bool next_line(std::istream& in, std::string& line, std::size_t& line_no) {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

}  // namespace

void write_observations(std::ostream& out, const ObservationSet& obs) {
    const bool truth = obs.true_shifts && obs.true_components;
    out << "mra-observations,1\n";
    out << "m,n,seed,alpha,sigma1_sq,sigma2_sq,has_truth\n";
    out << obs.m() << ',' << obs.n() << ',' << obs.seed << ',';
    out << std::setprecision(17);
    if (obs.generating_noise)
        out << obs.generating_noise->alpha << ',' << obs.generating_noise->sigma1_sq << ','
            << obs.generating_noise->sigma2_sq;
    else
        out << ",,";
    out << ',' << (truth ? 1 : 0) << '\n';
    for (std::size_t i = 0; i < obs.m(); ++i) {
        for (std::size_t j = 0; j < obs.n(); ++j) out << (j ? "," : "") << obs(i, j);
        out << '\n';
    }
    if (truth) {
        for (std::size_t i = 0; i < obs.m(); ++i) {
            out << (*obs.true_shifts)[i];
            for (std::size_t j = 0; j < obs.n(); ++j) out << ',' << int(obs.component(i, j));
            out << '\n';
        }
    }
}

ObservationSet read_observations(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!next_line(in, line, line_no) || line != "mra-observations,1")
        throw ParameterError("line 1: not an mra-observations v1 file");
    if (!next_line(in, line, line_no) || line != "m,n,seed,alpha,sigma1_sq,sigma2_sq,has_truth")
        throw ParameterError("line 2: unexpected header");
    if (!next_line(in, line, line_no)) throw ParameterError("line 3: missing metadata");
    const auto meta = split_commas(line);
    if (meta.size() != 7) throw ParameterError("line 3: expected 7 metadata fields");
    const std::size_t m = parse_u64(meta[0], line_no);
    const std::size_t n = parse_u64(meta[1], line_no);
    ObservationSet obs;
    obs.seed = parse_u64(meta[2], line_no);
    if (!meta[3].empty())
        obs.generating_noise = NoiseModel(parse_double(meta[3], line_no), parse_double(meta[4], line_no),
                                          parse_double(meta[5], line_no));
    const bool truth = parse_u64(meta[6], line_no) != 0;
    obs.data = Matrix(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        if (!next_line(in, line, line_no))
            throw ParameterError("line " + std::to_string(line_no + 1) + ": missing observation row");
        const auto fields = split_commas(line);
        if (fields.size() != n)
            throw ShapeError("line " + std::to_string(line_no) + ": expected " + std::to_string(n) +
                             " samples, got " + std::to_string(fields.size()));
        for (std::size_t j = 0; j < n; ++j) obs.data(i, j) = parse_double(fields[j], line_no);
    }
    if (truth) {
        std::vector<std::size_t> shifts(m);
        std::vector<std::uint8_t> comps(m * n);
        for (std::size_t i = 0; i < m; ++i) {
            if (!next_line(in, line, line_no))
                throw ParameterError("line " + std::to_string(line_no + 1) + ": missing truth row");
            const auto fields = split_commas(line);
            if (fields.size() != n + 1)
                throw ShapeError("line " + std::to_string(line_no) + ": malformed truth row");
            shifts[i] = parse_u64(fields[0], line_no);
            for (std::size_t j = 0; j < n; ++j)
                comps[i * n + j] = static_cast<std::uint8_t>(parse_u64(fields[j + 1], line_no));
        }
        obs.true_shifts = std::move(shifts);
        obs.true_components = std::move(comps);
    }
    validate(obs);
    return obs;
}

void save_observations(const std::filesystem::path& path, const ObservationSet& obs) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_observations(out, obs);
}

ObservationSet load_observations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_observations(in);
}

Signal load_signal(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<double> values;
    std::string tok;
    std::size_t line_no = 0;
    std::string line;
    while (next_line(in, line, line_no)) {
        if (line.empty() || line[0] == '#') continue;
        for (char& c : line)
            if (c == ',') c = ' ';
        std::istringstream ss(line);
        while (ss >> tok) values.push_back(parse_double(tok, line_no));
    }
    return Signal(std::move(values));
}

void save_signal(const std::filesystem::path& path, const Signal& u) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << std::setprecision(17);
    for (double v : u.values()) out << v << '\n';
}

}  // namespace mra
