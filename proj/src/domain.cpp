#include "hci/domain.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace hci {

namespace {

// Civil-calendar <-> serial-day conversions (proleptic Gregorian).
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097LL + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y = static_cast<int>(yy + (m <= 2));
}

unsigned days_in_month(int y, unsigned m) {
  static constexpr unsigned kDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2) {
    const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    return leap ? 29 : 28;
  }
  return kDays[m - 1];
}

std::string upper(std::string_view t) {
  std::string s(t);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

constexpr std::string_view kColourNames[kNumColours] = {"D", "E", "F", "G", "H",
                                                        "I", "J", "K", "L", "M"};
constexpr std::string_view kClarityNames[kNumClarities] = {"FL",  "IF",  "VVS1", "VVS2", "VS1",
                                                           "VS2", "SI1", "SI2",  "I1"};
constexpr std::string_view kGrade5Names[kNumGrade5] = {"EX", "VG", "G", "F", "P"};
constexpr std::string_view kFluorNames[kNumFluorescence] = {"NON", "FNT", "MED", "STG", "VST"};
constexpr std::string_view kShapeNames[kNumShapes] = {"Round",   "Cushion",  "Princess", "Oval",
                                                      "Emerald", "Pear",     "Marquise", "Radiant",
                                                      "Asscher", "Heart"};

template <class E, std::size_t N>
std::optional<E> parse_enum(std::string_view t, const std::string_view (&names)[N]) {
  const std::string u = upper(t);
  for (std::size_t i = 0; i < N; ++i) {
    if (u == upper(names[i])) return static_cast<E>(i);
  }
  return std::nullopt;
}

}  // namespace

Date Date::from_ymd(int y, unsigned m, unsigned d) {
  if (m < 1 || m > 12 || d < 1 || d > days_in_month(y, m)) {
    throw DataError("invalid calendar date");
  }
  return Date(static_cast<std::int32_t>(days_from_civil(y, m, d)));
}

Date Date::parse(const std::string& text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw DataError("invalid ISO date '" + text + "' (expected YYYY-MM-DD)");
  }
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
      throw DataError("invalid ISO date '" + text + "' (expected YYYY-MM-DD)");
    }
  }
  const int y = std::stoi(text.substr(0, 4));
  const unsigned m = static_cast<unsigned>(std::stoi(text.substr(5, 2)));
  const unsigned d = static_cast<unsigned>(std::stoi(text.substr(8, 2)));
  if (m < 1 || m > 12 || d < 1 || d > days_in_month(y, m)) {
    throw DataError("invalid calendar date '" + text + "'");
  }
  return Date(static_cast<std::int32_t>(days_from_civil(y, m, d)));
}

std::string Date::iso() const {
  int y;
  unsigned m, d;
  civil_from_days(serial_, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, m, d);
  return buf;
}

std::string_view to_string(Colour c) { return kColourNames[static_cast<int>(c)]; }
std::string_view to_string(Clarity c) { return kClarityNames[static_cast<int>(c)]; }
std::string_view to_string(Grade5 g) { return kGrade5Names[static_cast<int>(g)]; }
std::string_view to_string(Fluorescence f) { return kFluorNames[static_cast<int>(f)]; }
std::string_view to_string(Shape s) { return kShapeNames[static_cast<int>(s)]; }

std::optional<Colour> parse_colour(std::string_view t) {
  return parse_enum<Colour>(t, kColourNames);
}
std::optional<Clarity> parse_clarity(std::string_view t) {
  return parse_enum<Clarity>(t, kClarityNames);
}
std::optional<Grade5> parse_grade5(std::string_view t) {
  return parse_enum<Grade5>(t, kGrade5Names);
}
std::optional<Fluorescence> parse_fluorescence(std::string_view t) {
  return parse_enum<Fluorescence>(t, kFluorNames);
}
std::optional<Shape> parse_shape(std::string_view t) {
  return parse_enum<Shape>(t, kShapeNames);
}

int carat_class(double carat) {
  if (!(carat >= kMinCarat && carat < kMaxCarat)) {
    throw std::out_of_range("carat " + format_double(carat) + " outside [0.25, 100)");
  }
  for (int g = kNumClasses - 1; g >= 0; --g) {
    if (carat >= kClassLower[g]) return g;
  }
  return 0;  // unreachable
}

std::optional<PriceCents> parse_price_cents(std::string_view t) {
  if (t.empty()) return std::nullopt;
  std::size_t i = 0;
  std::int64_t dollars = 0;
  if (!std::isdigit(static_cast<unsigned char>(t[0]))) return std::nullopt;
  for (; i < t.size() && std::isdigit(static_cast<unsigned char>(t[i])); ++i) {
    if (dollars > 99'999'999'999'999LL) return std::nullopt;  // keeps cents in int64
    dollars = dollars * 10 + (t[i] - '0');
  }
  std::int64_t cents = 0;
  if (i < t.size()) {
    if (t[i] != '.') return std::nullopt;
    ++i;
    const std::size_t frac_digits = t.size() - i;
    if (frac_digits == 0 || frac_digits > 2) return std::nullopt;
    for (; i < t.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(t[i]))) return std::nullopt;
      cents = cents * 10 + (t[i] - '0');
    }
    if (frac_digits == 1) cents *= 10;
  }
  return dollars * 100 + cents;
}

std::string format_price(PriceCents cents) {
  const bool neg = cents < 0;
  const std::int64_t a = neg ? -cents : cents;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%lld.%02lld", neg ? "-" : "",
                static_cast<long long>(a / 100), static_cast<long long>(a % 100));
  return buf;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::optional<std::string> record_rejection_reason(const DiamondAttributes& a,
                                                   PriceCents price_cents) {
  if (!(a.carat >= kMinCarat && a.carat < kMaxCarat)) return "carat outside [0.25, 100)";
  if (price_cents <= 0) return "non-positive price";
  if (a.location.empty()) return "missing location";
  return std::nullopt;
}

namespace {

constexpr std::size_t kMaxStoredRejections = 100;

void add_rejection(ValidationReport& rep, std::size_t row, const std::string& reason) {
  if (rep.rejections.size() < kMaxStoredRejections) rep.rejections.emplace_back(row, reason);
  for (auto& [name, n] : rep.reason_counts) {
    if (name == reason) {
      ++n;
      return;
    }
  }
  rep.reason_counts.emplace_back(reason, 1);
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

void check_header(std::string_view got_line, std::string_view expected) {
  const auto got = split_csv_line(strip_cr(got_line));
  const auto want = split_csv_line(expected);
  for (std::size_t i = 0; i < want.size() || i < got.size(); ++i) {
    if (i >= got.size()) throw DataError("missing column '" + std::string(want[i]) + "'");
    if (i >= want.size()) throw DataError("unknown column '" + std::string(got[i]) + "'");
    if (got[i] != want[i]) {
      throw DataError("unknown column '" + std::string(got[i]) + "' (expected '" +
                      std::string(want[i]) + "')");
    }
  }
}

bool parse_double_field(std::string_view t, double& out) {
  const char* begin = t.data();
  const char* end = begin + t.size();
  const auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end;
}

}  // namespace

Snapshot parse_snapshot_csv(std::string_view csv_text, Date date, ValidationReport& report,
                            const ValidationPolicy& policy) {
  report = ValidationReport{};
  Snapshot snap;
  snap.date = date;

  std::size_t pos = 0;
  const std::size_t n = csv_text.size();
  auto next_line = [&](std::string_view& line) {
    if (pos >= n) return false;
    const std::size_t nl = csv_text.find('\n', pos);
    if (nl == std::string_view::npos) {
      line = strip_cr(csv_text.substr(pos));
      pos = n;
    } else {
      line = strip_cr(csv_text.substr(pos, nl - pos));
      pos = nl + 1;
    }
    return true;
  };

  std::string_view line;
  if (!next_line(line)) throw DataError("empty snapshot file");
  check_header(line, kSnapshotHeader);

  std::size_t row = 0;
  while (next_line(line)) {
    if (line.empty()) continue;
    ++row;
    ++report.total_rows;
    const auto f = split_csv_line(line);
    if (f.size() != 10) {
      add_rejection(report, row, "wrong field count");
      continue;
    }
    PricedDiamond rec;
    double carat;
    if (!parse_double_field(f[0], carat)) {
      add_rejection(report, row, "malformed carat");
      continue;
    }
    rec.attrs.carat = carat;
    const auto colour = parse_colour(f[1]);
    if (!colour) {
      add_rejection(report, row, "unknown colour");
      continue;
    }
    rec.attrs.colour = *colour;
    const auto clarity = parse_clarity(f[2]);
    if (!clarity) {
      add_rejection(report, row, "unknown clarity");
      continue;
    }
    rec.attrs.clarity = *clarity;
    const auto cut = parse_grade5(f[3]);
    if (!cut) {
      add_rejection(report, row, "unknown cut");
      continue;
    }
    rec.attrs.cut = *cut;
    const auto shape = parse_shape(f[4]);
    if (!shape) {
      add_rejection(report, row, "unknown shape");
      continue;
    }
    rec.attrs.shape = *shape;
    const auto polish = parse_grade5(f[5]);
    if (!polish) {
      add_rejection(report, row, "unknown polish");
      continue;
    }
    rec.attrs.polish = *polish;
    const auto symmetry = parse_grade5(f[6]);
    if (!symmetry) {
      add_rejection(report, row, "unknown symmetry");
      continue;
    }
    rec.attrs.symmetry = *symmetry;
    const auto fluor = parse_fluorescence(f[7]);
    if (!fluor) {
      add_rejection(report, row, "unknown fluorescence");
      continue;
    }
    rec.attrs.fluorescence = *fluor;
    rec.attrs.location = upper(f[8]);
    const auto price = parse_price_cents(f[9]);
    if (!price) {
      add_rejection(report, row, "malformed price");
      continue;
    }
    rec.price_cents = *price;
    if (auto reason = record_rejection_reason(rec.attrs, rec.price_cents)) {
      add_rejection(report, row, *reason);
      continue;
    }
    ++report.accepted_rows;
    snap.records.push_back(std::move(rec));
  }

  if (report.total_rows == 0 || report.accepted_rows == 0) {
    throw DataError("no valid rows in snapshot");
  }
  if (report.rejection_rate() > policy.max_rejection_rate) {
    throw DataError("rejection rate " + format_double(report.rejection_rate()) +
                    " exceeds ceiling " + format_double(policy.max_rejection_rate));
  }
  return snap;
}

Snapshot load_snapshot_csv(const std::string& path, Date date, ValidationReport& report,
                           const ValidationPolicy& policy) {
  return parse_snapshot_csv(read_text_file(path), date, report, policy);
}

void write_snapshot_csv(std::ostream& out, const Snapshot& snap) {
  out << kSnapshotHeader << '\n';
  for (const auto& r : snap.records) {
    out << format_double(r.attrs.carat) << ',' << to_string(r.attrs.colour) << ','
        << to_string(r.attrs.clarity) << ',' << to_string(r.attrs.cut) << ','
        << to_string(r.attrs.shape) << ',' << to_string(r.attrs.polish) << ','
        << to_string(r.attrs.symmetry) << ',' << to_string(r.attrs.fluorescence) << ','
        << r.attrs.location << ',' << format_price(r.price_cents) << '\n';
  }
}

std::string snapshot_to_csv(const Snapshot& snap) {
  std::ostringstream os;
  write_snapshot_csv(os, snap);
  return os.str();
}

void save_snapshot_csv(const std::string& path, const Snapshot& snap) {
  write_text_file(path, snapshot_to_csv(snap));
}

ValidationReport validate_snapshot(const Snapshot& snap) {
  ValidationReport rep;
  rep.total_rows = snap.records.size();
  std::size_t row = 0;
  for (const auto& r : snap.records) {
    ++row;
    if (auto reason = record_rejection_reason(r.attrs, r.price_cents)) {
      add_rejection(rep, row, *reason);
    } else {
      ++rep.accepted_rows;
    }
  }
  return rep;
}

ExternalSeries import_external_series(std::string_view csv_text) {
  ExternalSeries series;
  std::size_t pos = 0;
  const std::size_t n = csv_text.size();
  std::size_t lineno = 0;
  bool saw_header = false;
  while (pos < n) {
    const std::size_t nl = csv_text.find('\n', pos);
    std::string_view line = strip_cr(
        nl == std::string_view::npos ? csv_text.substr(pos) : csv_text.substr(pos, nl - pos));
    pos = nl == std::string_view::npos ? n : nl + 1;
    ++lineno;
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != "date,value") throw DataError("external series header must be 'date,value'");
      saw_header = true;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 2) {
      throw DataError("external series line " + std::to_string(lineno) + ": wrong field count");
    }
    const Date d = Date::parse(std::string(f[0]));
    double v;
    if (!parse_double_field(f[1], v)) {
      throw DataError("external series line " + std::to_string(lineno) + ": malformed value");
    }
    series.points.emplace_back(d, v);
  }
  if (!saw_header) throw DataError("empty external series file");
  std::stable_sort(series.points.begin(), series.points.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < series.points.size(); ++i) {
    if (series.points[i].first == series.points[i - 1].first) {
      throw DataError("duplicate date " + series.points[i].first.iso() + " in external series");
    }
  }
  return series;
}

ExternalSeries load_external_series(const std::string& path) {
  return import_external_series(read_text_file(path));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw DataError("failed writing file '" + path + "'");
}

}  // namespace hci
