#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "gradmrf/errors.hpp"

namespace gradmrf {

/// Grid extents (channels, height, width), all >= 1.
struct Shape3 {
    int c{0};
    int h{0};
    int w{0};

    std::size_t total() const {
        return static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
               static_cast<std::size_t>(w);
    }
    bool operator==(const Shape3&) const = default;
    std::string str() const;
};

inline int wrap_index(int i, int n) {
    int r = i % n;
    return r < 0 ? r + n : r;
}

/// Dense real c*h*w tensor, row-major (c, h, w). The universal container for
/// images, gradients, perturbation directions, and eigenvalue grids.
class TensorGrid {
public:
    TensorGrid() = default;
    explicit TensorGrid(Shape3 shape, double fill = 0.0);

    /// Validating constructor: length must be c*h*w and every entry finite.
    static TensorGrid from_data(Shape3 shape, std::vector<double> data);

    const Shape3& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }

    std::size_t index(int ic, int ih, int iw) const {
        return (static_cast<std::size_t>(ic) * shape_.h + ih) * shape_.w + iw;
    }
    double& at(int ic, int ih, int iw) { return data_[index(ic, ih, iw)]; }
    double at(int ic, int ih, int iw) const { return data_[index(ic, ih, iw)]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool all_finite() const;

    double dot(const TensorGrid& other) const;
    double squared_norm() const { return dot(*this); }
    double norm() const;
    double linf_norm() const;
    double sum() const;

    TensorGrid& operator+=(const TensorGrid& other);
    TensorGrid& operator-=(const TensorGrid& other);
    TensorGrid& operator*=(double s);
    void axpy(double a, const TensorGrid& x);  // this += a*x

    friend TensorGrid operator+(TensorGrid a, const TensorGrid& b) { return a += b; }
    friend TensorGrid operator-(TensorGrid a, const TensorGrid& b) { return a -= b; }
    friend TensorGrid operator*(TensorGrid a, double s) { return a *= s; }
    friend TensorGrid operator*(double s, TensorGrid a) { return a *= s; }

private:
    Shape3 shape_{};
    std::vector<double> data_;
};

/// Complex 3-D DFT coefficients of a TensorGrid, same (c, h, w) layout.
class SpectrumGrid {
public:
    SpectrumGrid() = default;
    explicit SpectrumGrid(Shape3 shape) : shape_(shape), data_(shape.total()) {}

    const Shape3& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }

    std::size_t index(int ic, int ih, int iw) const {
        return (static_cast<std::size_t>(ic) * shape_.h + ih) * shape_.w + iw;
    }
    std::complex<double>& at(int ic, int ih, int iw) { return data_[index(ic, ih, iw)]; }
    const std::complex<double>& at(int ic, int ih, int iw) const {
        return data_[index(ic, ih, iw)];
    }
    std::complex<double>& operator[](std::size_t i) { return data_[i]; }
    const std::complex<double>& operator[](std::size_t i) const { return data_[i]; }

    std::vector<std::complex<double>>& data() { return data_; }
    const std::vector<std::complex<double>>& data() const { return data_; }

    double squared_norm() const;

private:
    Shape3 shape_{};
    std::vector<std::complex<double>> data_;
};

/// GTZ1 tensor file format: magic "GTZ1", three u32 LE dims (c, h, w), one
/// dtype byte (0 = float64, 1 = float32), then the raw LE row-major payload.
enum class GtzDType : unsigned char { Float64 = 0, Float32 = 1 };

void write_gtz(const std::string& path, const TensorGrid& t,
               GtzDType dtype = GtzDType::Float64);
TensorGrid read_gtz(const std::string& path);

}  // namespace gradmrf
