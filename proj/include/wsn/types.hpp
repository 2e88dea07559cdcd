#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace wsn {

using NodeId = std::uint32_t;
using LineId = std::uint32_t;

// Simulated time in integer microseconds. Integer so that event ordering and
// trace bytes never depend on floating-point accumulation.
using SimTime = std::int64_t;

inline constexpr NodeId kBroadcast = std::numeric_limits<NodeId>::max();

inline SimTime seconds_to_us(double s) {
    return static_cast<SimTime>(s * 1e6 + (s >= 0 ? 0.5 : -0.5));
}

inline double us_to_seconds(SimTime t) { return static_cast<double>(t) / 1e6; }

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// Hop count to the base station; the infinite value encodes "not connected".
class Hops {
  public:
    constexpr Hops() = default;  // unconnected
    static constexpr Hops finite(std::uint32_t v) { return Hops(v); }
    static constexpr Hops infinity() { return Hops(); }

    constexpr bool is_infinite() const { return raw_ == kInf; }
    constexpr bool is_finite() const { return raw_ != kInf; }

    // Only meaningful for finite values.
    constexpr std::uint32_t value() const { return raw_; }

    // parent's hops + 1, collapsed to infinity at or above the ceiling.
    constexpr Hops bumped(std::uint32_t max_hops) const {
        if (is_infinite() || raw_ + 1 >= max_hops) return infinity();
        return finite(raw_ + 1);
    }

    constexpr bool operator==(const Hops&) const = default;
    constexpr bool operator<(const Hops& o) const { return raw_ < o.raw_; }

  private:
    static constexpr std::uint32_t kInf = std::numeric_limits<std::uint32_t>::max();
    constexpr explicit Hops(std::uint32_t v) : raw_(v) {}
    std::uint32_t raw_ = kInf;
};

inline std::string to_string(Hops h) {
    return h.is_infinite() ? "inf" : std::to_string(h.value());
}

/// Malformed input file (topology, scenario, trace); carries source position.
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& source, int line, const std::string& msg)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + msg),
          source_(source),
          line_(line) {}

    const std::string& source() const { return source_; }
    int line() const { return line_; }

  private:
    std::string source_;
    int line_;
};

class TopologyError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace wsn
