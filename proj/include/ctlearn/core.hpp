#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctlearn {

using Shape = std::vector<int>;

inline std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("shape dimensions must be positive");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

inline std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

// Dense row-major N-d array. The workhorse value type for images, sinograms
// and network parameters.
template <typename T>
class NdArray {
  public:
    NdArray() = default;
    explicit NdArray(Shape shape) : shape_(std::move(shape)), data_(numel(shape_), T(0)) {}
    NdArray(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != numel(shape_))
            throw std::invalid_argument("NdArray: data size " + std::to_string(data_.size()) +
                                        " does not match shape " + shape_str(shape_));
    }
    NdArray(Shape shape, T fill) : shape_(std::move(shape)), data_(numel(shape_), fill) {}

    const Shape& shape() const { return shape_; }
    int dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::span<T> span() { return {data_.data(), data_.size()}; }
    std::span<const T> span() const { return {data_.data(), data_.size()}; }
    std::vector<T>& vec() { return data_; }
    const std::vector<T>& vec() const { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    // 2-d accessors, row-major (row, col).
    T& at(int r, int c) { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }
    const T& at(int r, int c) const { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }

    bool same_shape(const NdArray& other) const { return shape_ == other.shape_; }

    template <typename U>
    NdArray<U> cast() const {
        std::vector<U> out(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return NdArray<U>(shape_, std::move(out));
    }

  private:
    Shape shape_;
    std::vector<T> data_;
};

template <typename T>
double dot(std::span<const T> a, std::span<const T> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return s;
}

template <typename T>
double norm2(std::span<const T> a) {
    double s = 0.0;
    for (const T& v : a) s += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(s);
}

template <typename T>
void check_same_shape(const NdArray<T>& a, const NdArray<T>& b, const char* what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
}

}  // namespace ctlearn
