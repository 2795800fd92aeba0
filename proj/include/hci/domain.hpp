#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hci/dates.hpp"

namespace hci {

enum class Colour : std::uint8_t { D, E, F, G, H, I, J, K, L, M };
enum class Clarity : std::uint8_t { FL, IF, VVS1, VVS2, VS1, VS2, SI1, SI2, I1 };
enum class Grade5 : std::uint8_t { EX, VG, G, F, P };  // cut / polish / symmetry
enum class Fluorescence : std::uint8_t { NON, FNT, MED, STG, VST };
// Round and Cushion are deliberately adjacent: demand reallocation between
// them moves a single inverse-CDF boundary, leaving all other draws intact.
enum class Shape : std::uint8_t {
  Round, Cushion, Princess, Oval, Emerald, Pear, Marquise, Radiant, Asscher, Heart
};

inline constexpr int kNumColours = 10;
inline constexpr int kNumClarities = 9;
inline constexpr int kNumGrade5 = 5;
inline constexpr int kNumFluorescence = 5;
inline constexpr int kNumShapes = 10;

std::string_view to_string(Colour c);
std::string_view to_string(Clarity c);
std::string_view to_string(Grade5 g);
std::string_view to_string(Fluorescence f);
std::string_view to_string(Shape s);

// Case-insensitive parsing; canonical spelling on output.
std::optional<Colour> parse_colour(std::string_view t);
std::optional<Clarity> parse_clarity(std::string_view t);
std::optional<Grade5> parse_grade5(std::string_view t);
std::optional<Fluorescence> parse_fluorescence(std::string_view t);
std::optional<Shape> parse_shape(std::string_view t);

// Carat classes: half-open weight bands; a boundary weight belongs to the
// upper class (0.99 ct is class 2, 1.00 ct is class 3).
inline constexpr int kNumClasses = 7;
inline constexpr std::array<double, kNumClasses> kClassLower = {0.25, 0.50, 1.00, 2.00,
                                                                3.00, 4.00, 5.00};
inline constexpr std::array<double, kNumClasses> kClassUpper = {0.50, 1.00, 2.00, 3.00,
                                                                4.00, 5.00, 100.00};
inline constexpr double kMinCarat = 0.25;
inline constexpr double kMaxCarat = 100.0;

// 0-based class for a carat weight inside [0.25, 100).
int carat_class(double carat);

struct DiamondAttributes {
  double carat = 0.0;
  Colour colour = Colour::D;
  Clarity clarity = Clarity::FL;
  Grade5 cut = Grade5::EX;
  Grade5 polish = Grade5::EX;
  Grade5 symmetry = Grade5::EX;
  Fluorescence fluorescence = Fluorescence::NON;
  Shape shape = Shape::Round;
  std::string location;  // canonical uppercase

  bool operator==(const DiamondAttributes&) const = default;
};

// Prices are integer US cents so snapshot totals stay exact; statistics
// convert to double at the point of use.
using PriceCents = std::int64_t;

std::optional<PriceCents> parse_price_cents(std::string_view t);
std::string format_price(PriceCents cents);
inline double price_usd(PriceCents cents) { return static_cast<double>(cents) / 100.0; }

struct PricedDiamond {
  DiamondAttributes attrs;
  PriceCents price_cents = 0;

  bool operator==(const PricedDiamond&) const = default;
};

// Cross-section of the market on one date.
struct Snapshot {
  Date date;
  std::vector<PricedDiamond> records;
};

struct ValidationPolicy {
  double max_rejection_rate = 0.05;
};

struct ValidationReport {
  std::size_t total_rows = 0;
  std::size_t accepted_rows = 0;
  // (1-based data row number, reason); capped verbatim list plus full counts.
  std::vector<std::pair<std::size_t, std::string>> rejections;
  std::vector<std::pair<std::string, std::size_t>> reason_counts;

  std::size_t rejected_rows() const { return total_rows - accepted_rows; }
  double rejection_rate() const {
    return total_rows == 0 ? 0.0 : static_cast<double>(rejected_rows()) / total_rows;
  }
};

inline constexpr std::string_view kSnapshotHeader =
    "carat,colour,clarity,cut,shape,polish,symmetry,fluorescence,location,price_usd";

// Checks one record against the domain rules; empty optional means valid.
std::optional<std::string> record_rejection_reason(const DiamondAttributes& a,
                                                   PriceCents price_cents);

// Parses a snapshot CSV (exact header, one record per line). Rejected rows
// are reported, not fatal, unless the rejection rate exceeds the policy
// ceiling or no valid rows remain.
Snapshot parse_snapshot_csv(std::string_view csv_text, Date date, ValidationReport& report,
                            const ValidationPolicy& policy = {});
Snapshot load_snapshot_csv(const std::string& path, Date date, ValidationReport& report,
                           const ValidationPolicy& policy = {});

void write_snapshot_csv(std::ostream& out, const Snapshot& snap);
std::string snapshot_to_csv(const Snapshot& snap);
void save_snapshot_csv(const std::string& path, const Snapshot& snap);

// Re-checks an in-memory snapshot against the same rules the parser applies.
ValidationReport validate_snapshot(const Snapshot& snap);

// External comparison series: "date,value" CSV, ISO dates, sorted output.
struct ExternalSeries {
  std::vector<std::pair<Date, double>> points;
};

ExternalSeries import_external_series(std::string_view csv_text);
ExternalSeries load_external_series(const std::string& path);

// Small file helpers shared by the CLI and tests.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

// Shortest round-trip decimal form of a double (to_chars).
std::string format_double(double v);

}  // namespace hci
