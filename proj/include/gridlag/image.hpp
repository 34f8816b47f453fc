#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace gridlag {

/// Dense row-major H x W raster. Row 0 is the northern edge of the grid.
template <class T>
class Image {
public:
    Image() = default;
    Image(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    T& at(std::size_t r, std::size_t c) {
        check(r, c);
        return data_[r * cols_ + c];
    }
    const T& at(std::size_t r, std::size_t c) const {
        check(r, c);
        return data_[r * cols_ + c];
    }

    [[nodiscard]] std::span<T> values() noexcept { return data_; }
    [[nodiscard]] std::span<const T> values() const noexcept { return data_; }

    [[nodiscard]] bool same_shape(std::size_t rows, std::size_t cols) const noexcept {
        return rows_ == rows && cols_ == cols;
    }
    template <class U>
    [[nodiscard]] bool same_shape(const Image<U>& other) const noexcept {
        return rows_ == other.rows() && cols_ == other.cols();
    }

    friend bool operator==(const Image&, const Image&) = default;

private:
    void check(std::size_t r, std::size_t c) const {
        if (r >= rows_ || c >= cols_) throw std::out_of_range("image index out of range");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using CountImage = Image<std::uint32_t>;
using RealImage = Image<double>;

}  // namespace gridlag
