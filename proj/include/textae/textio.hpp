#pragma once

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "textae/error.hpp"

namespace textae {

// 17 significant digits round-trips an IEEE double exactly, so files written
// through here reload bitwise.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_doubles(std::ostream& os, const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ' ';
        os << fmt_double(v[i]);
    }
    os << '\n';
}

inline void expect_token(std::istream& is, const std::string& want) {
    std::string got;
    if (!(is >> got) || got != want)
        throw IoError("expected token '" + want + "', got '" + got + "'");
}

template <class T>
inline T read_value(std::istream& is, const char* what) {
    T v;
    if (!(is >> v)) throw IoError(std::string("failed to read ") + what);
    return v;
}

inline std::vector<double> read_doubles(std::istream& is, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        if (!(is >> v[i])) throw IoError("failed to read double vector");
    return v;
}

}  // namespace textae
