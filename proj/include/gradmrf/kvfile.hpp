#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gradmrf/stencil.hpp"

namespace gradmrf {

/// Human-editable structured text: one `key value...` record per line,
/// '#' starts a comment, keys may repeat. Order is preserved, so emitted
/// files are byte-stable for identical content.
class KvFile {
public:
    struct Record {
        std::string key;
        std::vector<std::string> values;
    };

    void add(const std::string& key, std::vector<std::string> values);
    void add_scalar(const std::string& key, const std::string& value);
    void add_int(const std::string& key, long long value);
    void add_double(const std::string& key, double value);
    void add_doubles(const std::string& key, const std::vector<double>& values);

    bool has(const std::string& key) const;
    /// First record for the key; throws ConfigError if missing.
    const std::vector<std::string>& get(const std::string& key) const;
    std::string get_scalar(const std::string& key) const;
    std::string get_scalar_or(const std::string& key, const std::string& fallback) const;
    long long get_int(const std::string& key) const;
    long long get_int_or(const std::string& key, long long fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;
    /// All records with the key, in file order.
    std::vector<std::vector<std::string>> all(const std::string& key) const;

    const std::vector<Record>& records() const { return records_; }

    std::string to_string() const;
    static KvFile parse(const std::string& text);
    void save(const std::string& path) const;
    static KvFile load(const std::string& path);

private:
    std::vector<Record> records_;
};

/// FNV-1a 64-bit over the canonical text, for run manifests.
std::uint64_t fnv1a64(const std::string& text);

// Stencil / model serialization in the key-value format.
void write_stencil(KvFile& kv, const StencilSpec& spec);
StencilSpec read_stencil(const KvFile& kv);

void save_model_file(const std::string& path, const StencilSpec& spec, const ParamVector& theta,
                     double sigma2, double delta1);
struct ModelFile {
    StencilSpec spec;
    ParamVector theta;
    double sigma2;
    double delta1;
};
ModelFile load_model_file(const std::string& path);

}  // namespace gradmrf
