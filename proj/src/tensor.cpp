#include "gradmrf/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace gradmrf {

std::string Shape3::str() const {
    return std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
}

namespace {

void require_valid_shape(const Shape3& s, const char* where) {
    if (s.c < 1 || s.h < 1 || s.w < 1)
        throw ShapeError(std::string(where) + ": invalid shape " + s.str());
}

void require_same_shape(const Shape3& a, const Shape3& b, const char* where) {
    if (!(a == b))
        throw ShapeError(std::string(where) + ": shape mismatch " + a.str() + " vs " + b.str());
}

}  // namespace

TensorGrid::TensorGrid(Shape3 shape, double fill) : shape_(shape) {
    require_valid_shape(shape, "TensorGrid");
    data_.assign(shape.total(), fill);
}

TensorGrid TensorGrid::from_data(Shape3 shape, std::vector<double> data) {
    require_valid_shape(shape, "TensorGrid::from_data");
    if (data.size() != shape.total())
        throw ShapeError("TensorGrid::from_data: data length " + std::to_string(data.size()) +
                         " does not match shape " + shape.str());
    TensorGrid t;
    t.shape_ = shape;
    t.data_ = std::move(data);
    if (!t.all_finite())
        throw std::invalid_argument("TensorGrid::from_data: non-finite entry");
    return t;
}

bool TensorGrid::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

double TensorGrid::dot(const TensorGrid& other) const {
    require_same_shape(shape_, other.shape_, "TensorGrid::dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < data_.size(); ++i) acc += data_[i] * other.data_[i];
    return acc;
}

double TensorGrid::norm() const { return std::sqrt(squared_norm()); }

double TensorGrid::linf_norm() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

double TensorGrid::sum() const {
    double acc = 0.0;
    for (double v : data_) acc += v;
    return acc;
}

TensorGrid& TensorGrid::operator+=(const TensorGrid& other) {
    require_same_shape(shape_, other.shape_, "TensorGrid::operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

TensorGrid& TensorGrid::operator-=(const TensorGrid& other) {
    require_same_shape(shape_, other.shape_, "TensorGrid::operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

TensorGrid& TensorGrid::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

void TensorGrid::axpy(double a, const TensorGrid& x) {
    require_same_shape(shape_, x.shape_, "TensorGrid::axpy");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += a * x.data_[i];
}

double SpectrumGrid::squared_norm() const {
    double acc = 0.0;
    for (const auto& z : data_) acc += std::norm(z);
    return acc;
}

namespace {

constexpr char kGtzMagic[4] = {'G', 'T', 'Z', '1'};

void put_u32_le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32_le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_gtz(const std::string& path, const TensorGrid& t, GtzDType dtype) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("write_gtz: cannot open " + path);
    os.write(kGtzMagic, 4);
    put_u32_le(os, static_cast<std::uint32_t>(t.shape().c));
    put_u32_le(os, static_cast<std::uint32_t>(t.shape().h));
    put_u32_le(os, static_cast<std::uint32_t>(t.shape().w));
    unsigned char tag = static_cast<unsigned char>(dtype);
    os.write(reinterpret_cast<const char*>(&tag), 1);
    if (dtype == GtzDType::Float64) {
        os.write(reinterpret_cast<const char*>(t.data().data()),
                 static_cast<std::streamsize>(t.size() * sizeof(double)));
    } else {
        std::vector<float> buf(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) buf[i] = static_cast<float>(t[i]);
        os.write(reinterpret_cast<const char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!os) throw ConfigError("write_gtz: write failed for " + path);
}

TensorGrid read_gtz(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("read_gtz: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kGtzMagic, 4) != 0)
        throw ConfigError("read_gtz: bad magic in " + path);
    Shape3 shape;
    shape.c = static_cast<int>(get_u32_le(is));
    shape.h = static_cast<int>(get_u32_le(is));
    shape.w = static_cast<int>(get_u32_le(is));
    unsigned char tag = 0;
    is.read(reinterpret_cast<char*>(&tag), 1);
    if (!is) throw ConfigError("read_gtz: truncated header in " + path);
    if (shape.c < 1 || shape.h < 1 || shape.w < 1)
        throw ConfigError("read_gtz: invalid dims in " + path);
    std::size_t n = shape.total();
    std::vector<double> data(n);
    if (tag == static_cast<unsigned char>(GtzDType::Float64)) {
        is.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
    } else if (tag == static_cast<unsigned char>(GtzDType::Float32)) {
        std::vector<float> buf(n);
        is.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(n * sizeof(float)));
        for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<double>(buf[i]);
    } else {
        throw ConfigError("read_gtz: unknown dtype tag " + std::to_string(tag) + " in " + path);
    }
    if (!is) throw ConfigError("read_gtz: truncated payload in " + path);
    return TensorGrid::from_data(shape, std::move(data));
}

}  // namespace gradmrf
