#include "gradmrf/kvfile.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gradmrf/errors.hpp"

namespace gradmrf {

namespace {

std::string format_double(double v) {
    // shortest round-trip representation keeps files diff-able
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

double parse_double(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("kvfile: bad number '" + s + "' for key '" + key + "'");
    }
}

}  // namespace

void KvFile::add(const std::string& key, std::vector<std::string> values) {
    records_.push_back({key, std::move(values)});
}

void KvFile::add_scalar(const std::string& key, const std::string& value) {
    add(key, {value});
}

void KvFile::add_int(const std::string& key, long long value) {
    add_scalar(key, std::to_string(value));
}

void KvFile::add_double(const std::string& key, double value) {
    add_scalar(key, format_double(value));
}

void KvFile::add_doubles(const std::string& key, const std::vector<double>& values) {
    std::vector<std::string> v;
    v.reserve(values.size());
    for (double x : values) v.push_back(format_double(x));
    add(key, std::move(v));
}

bool KvFile::has(const std::string& key) const {
    for (const auto& r : records_)
        if (r.key == key) return true;
    return false;
}

const std::vector<std::string>& KvFile::get(const std::string& key) const {
    for (const auto& r : records_)
        if (r.key == key) return r.values;
    throw ConfigError("kvfile: missing key '" + key + "'");
}

std::string KvFile::get_scalar(const std::string& key) const {
    const auto& v = get(key);
    if (v.size() != 1)
        throw ConfigError("kvfile: key '" + key + "' expects a single value");
    return v[0];
}

std::string KvFile::get_scalar_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_scalar(key) : fallback;
}

long long KvFile::get_int(const std::string& key) const {
    const std::string s = get_scalar(key);
    try {
        std::size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("kvfile: bad integer '" + s + "' for key '" + key + "'");
    }
}

long long KvFile::get_int_or(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

double KvFile::get_double(const std::string& key) const {
    return parse_double(get_scalar(key), key);
}

double KvFile::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::vector<double> KvFile::get_doubles(const std::string& key) const {
    const auto& raw = get(key);
    std::vector<double> out;
    out.reserve(raw.size());
    for (const auto& s : raw) out.push_back(parse_double(s, key));
    return out;
}

std::vector<std::vector<std::string>> KvFile::all(const std::string& key) const {
    std::vector<std::vector<std::string>> out;
    for (const auto& r : records_)
        if (r.key == key) out.push_back(r.values);
    return out;
}

std::string KvFile::to_string() const {
    std::ostringstream os;
    for (const auto& r : records_) {
        os << r.key;
        for (const auto& v : r.values) os << ' ' << v;
        os << '\n';
    }
    return os.str();
}

KvFile KvFile::parse(const std::string& text) {
    KvFile kv;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;  // blank or comment-only line
        std::vector<std::string> values;
        std::string tok;
        while (ls >> tok) values.push_back(tok);
        kv.records_.push_back({key, std::move(values)});
    }
    return kv;
}

void KvFile::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("kvfile: cannot open " + path + " for writing");
    os << to_string();
    if (!os) throw ConfigError("kvfile: write failed for " + path);
}

KvFile KvFile::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("kvfile: cannot open " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse(buf.str());
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_stencil(KvFile& kv, const StencilSpec& spec) {
    kv.add_scalar("stencil.name", spec.name());
    kv.add_int("stencil.param_count", spec.param_count());
    for (const auto& e : spec.entries())
        kv.add("stencil.offset",
               {std::to_string(e.offset.dc), std::to_string(e.offset.dh),
                std::to_string(e.offset.dw), std::to_string(e.param)});
}

StencilSpec read_stencil(const KvFile& kv) {
    const std::string name = kv.get_scalar("stencil.name");
    const int param_count = static_cast<int>(kv.get_int("stencil.param_count"));
    std::vector<StencilSpec::Entry> entries;
    for (const auto& vals : kv.all("stencil.offset")) {
        if (vals.size() != 4)
            throw ConfigError("kvfile: stencil.offset expects 'dc dh dw param'");
        entries.push_back({{std::stoi(vals[0]), std::stoi(vals[1]), std::stoi(vals[2])},
                           std::stoi(vals[3])});
    }
    return StencilSpec(name, std::move(entries), param_count);
}

void save_model_file(const std::string& path, const StencilSpec& spec, const ParamVector& theta,
                     double sigma2, double delta1) {
    KvFile kv;
    write_stencil(kv, spec);
    kv.add_doubles("theta", theta);
    kv.add_double("sigma2", sigma2);
    kv.add_double("delta1", delta1);
    kv.save(path);
}

ModelFile load_model_file(const std::string& path) {
    const KvFile kv = KvFile::load(path);
    StencilSpec spec = read_stencil(kv);
    ParamVector theta = kv.get_doubles("theta");
    if (static_cast<int>(theta.size()) != spec.param_count())
        throw ConfigError("model file " + path + ": theta length does not match stencil");
    return {std::move(spec), std::move(theta), kv.get_double_or("sigma2", 1.0),
            kv.get_double_or("delta1", 0.1)};
}

}  // namespace gradmrf
