#pragma once

#include <cstdint>
#include <string>

namespace qstack {

// Hourly UTC instants stored as seconds since the Unix epoch. No time zones,
// no DST: the panel contract is a constant 3600 s step.
using EpochSeconds = std::int64_t;

constexpr EpochSeconds kHour = 3600;

struct CivilTime {
  int year;
  int month;  // 1..12
  int day;    // 1..31
  int hour;   // 0..23
  int minute;
  int second;
};

EpochSeconds civil_to_epoch(const CivilTime& c);
CivilTime epoch_to_civil(EpochSeconds t);

// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_iso8601(EpochSeconds t);

// Throws std::invalid_argument on malformed input.
EpochSeconds parse_iso8601(const std::string& s);

inline int year_of(EpochSeconds t) { return epoch_to_civil(t).year; }

// First instant of the given calendar year.
EpochSeconds year_start(int year);

}  // namespace qstack
