#pragma once

// Little-endian byte encoding helpers shared by the tensor and SLat formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "fusecond/error.hpp"

namespace fusecond::detail {

class ByteWriter {
public:
    void raw(std::string_view bytes) { out_.append(bytes); }

    template <typename T>
    void uint(T value) {
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            out_.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
        }
    }

    void f32(float value) { uint(std::bit_cast<std::uint32_t>(value)); }

    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class ByteReader {
public:
    ByteReader(std::string_view bytes, const char* what) : bytes_(bytes), what_(what) {}

    std::string_view raw(std::size_t n) {
        need(n);
        auto out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    template <typename T>
    T uint() {
        need(sizeof(T));
        T value = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            value |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(T);
        return value;
    }

    float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }

    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            fail(ErrorCategory::format, std::string(what_) + ": truncated data");
        }
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
    const char* what_;
};

}  // namespace fusecond::detail
