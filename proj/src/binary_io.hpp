#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "irf/error.hpp"

// Little-endian primitives shared by the index and embedding file formats.

namespace irf::detail {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

class BinaryWriter {
  public:
    explicit BinaryWriter(std::ostream& out) : out_(out) {}

    template <typename T>
        requires std::is_arithmetic_v<T>
    void put(T value) {
        out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
    }

    void put_string(const std::string& s) {
        put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

    template <typename T>
        requires std::is_arithmetic_v<T>
    void put_array(const T* data, std::size_t n) {
        out_.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(T)));
    }

    void put_raw(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }

  private:
    std::ostream& out_;
};

class BinaryReader {
  public:
    BinaryReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    template <typename T>
        requires std::is_arithmetic_v<T>
    T get() {
        T value{};
        in_.read(reinterpret_cast<char*>(&value), sizeof(T));
        check();
        return value;
    }

    std::string get_string() {
        auto n = get<std::uint32_t>();
        std::string s(n, '\0');
        in_.read(s.data(), n);
        check();
        return s;
    }

    template <typename T>
        requires std::is_arithmetic_v<T>
    void get_array(T* data, std::size_t n) {
        in_.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(T)));
        check();
    }

    void get_raw(char* data, std::size_t n) {
        in_.read(data, static_cast<std::streamsize>(n));
        check();
    }

    [[noreturn]] void fail(const std::string& what) const { throw InputError(source_ + ": " + what); }

  private:
    void check() const {
        if (!in_) {
            fail("truncated file");
        }
    }

    std::istream& in_;
    std::string source_;
};

}  // namespace irf::detail
