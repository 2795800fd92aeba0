#include <doctest.h>

#include <sstream>
#include <string>

#include "hci/domain.hpp"

using namespace hci;

namespace {

PricedDiamond make_record(double carat, Shape shape = Shape::Round,
                          PriceCents price = 123456) {
  PricedDiamond r;
  r.attrs.carat = carat;
  r.attrs.colour = Colour::F;
  r.attrs.clarity = Clarity::VS1;
  r.attrs.cut = Grade5::EX;
  r.attrs.polish = Grade5::VG;
  r.attrs.symmetry = Grade5::EX;
  r.attrs.fluorescence = Fluorescence::NON;
  r.attrs.shape = shape;
  r.attrs.location = "NYC";
  r.price_cents = price;
  return r;
}

std::size_t reason_count(const ValidationReport& report, std::string_view reason) {
  for (const auto& [name, count] : report.reason_counts) {
    if (name == reason) return count;
  }
  return 0;
}

}  // namespace

TEST_SUITE("domain") {

TEST_CASE("date parse and format round-trip") {
  for (const char* s : {"1970-01-01", "2024-02-29", "2026-08-17", "1999-12-31"}) {
    CHECK(Date::parse(s).iso() == s);
  }
  CHECK(Date::parse("1970-01-01").serial() == 0);
  CHECK(Date::parse("1970-01-02").serial() == 1);
  CHECK(Date::parse("2026-01-05") < Date::parse("2026-01-12"));
  CHECK(Date::parse("2026-01-05").plus_days(7) == Date::parse("2026-01-12"));
}

TEST_CASE("date parser rejects malformed input") {
  for (const char* s : {"2023-02-29", "2026-13-01", "2026-00-10", "2026-01-32", "garbage",
                        "2026-1-05", "2026-01-05x", "", "20260105"}) {
    CHECK_THROWS_AS(Date::parse(s), DataError);
  }
}

TEST_CASE("carat classes use half-open bands with boundaries rounding up") {
  CHECK(carat_class(0.25) == 0);
  CHECK(carat_class(0.49) == 0);
  CHECK(carat_class(0.50) == 1);
  CHECK(carat_class(0.99) == 1);
  CHECK(carat_class(1.00) == 2);
  CHECK(carat_class(1.99) == 2);
  CHECK(carat_class(2.00) == 3);
  CHECK(carat_class(3.00) == 4);
  CHECK(carat_class(4.00) == 5);
  CHECK(carat_class(5.00) == 6);
  CHECK(carat_class(99.99) == 6);
  CHECK_THROWS_AS(carat_class(0.24), std::out_of_range);
  CHECK_THROWS_AS(carat_class(100.0), std::out_of_range);
}

TEST_CASE("price parsing is exact in cents") {
  CHECK(parse_price_cents("1234.56") == 123456);
  CHECK(parse_price_cents("0.5") == 50);
  CHECK(parse_price_cents("0.05") == 5);
  CHECK(parse_price_cents("1000") == 100000);
  CHECK(parse_price_cents("12.3") == 1230);
  for (const char* s : {"abc", "1.234", "-5", "", "1e5", "12.", ".5", "1,000"}) {
    CHECK(!parse_price_cents(s).has_value());
  }
  CHECK(format_price(123456) == "1234.56");
  CHECK(format_price(50) == "0.50");
  CHECK(format_price(100000) == "1000.00");
  CHECK(price_usd(123456) == doctest::Approx(1234.56).epsilon(1e-12));
}

TEST_CASE("enum parsing is case-insensitive and strict") {
  CHECK(parse_colour("d") == Colour::D);
  CHECK(parse_clarity("vvs1") == Clarity::VVS1);
  CHECK(parse_grade5("ex") == Grade5::EX);
  CHECK(parse_fluorescence("Non") == Fluorescence::NON);
  CHECK(parse_shape("round") == Shape::Round);
  CHECK(!parse_colour("Z").has_value());
  CHECK(!parse_shape("Trillion").has_value());
  CHECK(to_string(Shape::Cushion) == "Cushion");
  CHECK(to_string(Clarity::SI2) == "SI2");
}

TEST_CASE("snapshot CSV round-trips") {
  Snapshot snap;
  snap.date = Date::parse("2026-01-05");
  snap.records.push_back(make_record(0.31));
  snap.records.push_back(make_record(1.52, Shape::Cushion, 9999901));
  snap.records.push_back(make_record(5.00, Shape::Pear, 1));
  const std::string csv = snapshot_to_csv(snap);
  ValidationReport report;
  const Snapshot back = parse_snapshot_csv(csv, snap.date, report);
  REQUIRE(back.records.size() == snap.records.size());
  for (std::size_t i = 0; i < back.records.size(); ++i) {
    CHECK(back.records[i].attrs == snap.records[i].attrs);
    CHECK(back.records[i].price_cents == snap.records[i].price_cents);
  }
  CHECK(report.total_rows == 3);
  CHECK(report.accepted_rows == 3);
}

TEST_CASE("snapshot parser reports reasons and enforces the rejection ceiling") {
  std::ostringstream os;
  os << kSnapshotHeader << "\n";
  for (int i = 0; i < 20; ++i) {
    os << "1.0" << i % 10 << ",F,VS1,EX,Round,VG,EX,NON,NYC,5000.00\n";
  }
  SUBCASE("one bad row in twenty-one stays under the ceiling") {
    os << "0.10,F,VS1,EX,Round,VG,EX,NON,NYC,5000.00\n";  // carat below range
    ValidationReport report;
    const Snapshot snap = parse_snapshot_csv(os.str(), Date::parse("2026-01-05"), report);
    CHECK(snap.records.size() == 20);
    CHECK(report.rejected_rows() == 1);
    REQUIRE(report.rejections.size() == 1);
    CHECK(report.rejections[0].first == 21);  // 1-based data row
    CHECK(reason_count(report, "carat outside [0.25, 100)") == 1);
  }
  SUBCASE("exceeding the ceiling raises") {
    os << "0.10,F,VS1,EX,Round,VG,EX,NON,NYC,5000.00\n";
    os << "1.00,F,VS1,EX,Round,VG,EX,NON,NYC,0.00\n";  // non-positive price
    ValidationReport report;
    CHECK_THROWS_AS(parse_snapshot_csv(os.str(), Date::parse("2026-01-05"), report), DataError);
  }
  SUBCASE("unknown enum value is a row rejection, not a crash") {
    os << "1.00,Q,VS1,EX,Round,VG,EX,NON,NYC,5000.00\n";
    ValidationReport report;
    const Snapshot snap = parse_snapshot_csv(os.str(), Date::parse("2026-01-05"), report);
    CHECK(snap.records.size() == 20);
    CHECK(reason_count(report, "unknown colour") == 1);
  }
}

TEST_CASE("snapshot parser validates the header and field counts") {
  ValidationReport report;
  CHECK_THROWS_AS(parse_snapshot_csv("carat,colour\n", Date::parse("2026-01-05"), report),
                  DataError);
  const std::string wrong =
      "carat,color,clarity,cut,shape,polish,symmetry,fluorescence,location,price_usd\n";
  CHECK_THROWS_WITH_AS(parse_snapshot_csv(wrong, Date::parse("2026-01-05"), report),
                       doctest::Contains("colour"), DataError);
  const std::string empty = std::string(kSnapshotHeader) + "\n";
  CHECK_THROWS_AS(parse_snapshot_csv(empty, Date::parse("2026-01-05"), report), DataError);
}

TEST_CASE("external series import sorts and rejects duplicates") {
  const ExternalSeries s = import_external_series(
      "date,value\n2026-02-02,101.5\n2026-01-05,100\n2026-03-02,99.25\n");
  REQUIRE(s.points.size() == 3);
  CHECK(s.points[0].first == Date::parse("2026-01-05"));
  CHECK(s.points[0].second == doctest::Approx(100.0));
  CHECK(s.points[2].first == Date::parse("2026-03-02"));
  CHECK_THROWS_WITH_AS(
      import_external_series("date,value\n2026-01-05,1\n2026-01-05,2\n"),
      doctest::Contains("2026-01-05"), DataError);
  CHECK_THROWS_AS(import_external_series("time,value\n"), DataError);
  CHECK_THROWS_AS(import_external_series("date,value\n2026-01-05,abc\n"), DataError);
}

TEST_CASE("format_double round-trips through parsing") {
  for (const double v : {0.0, 1.0, -2.5, 1e-9, 1234.5678, 0.1, 1e17}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

}  // TEST_SUITE
