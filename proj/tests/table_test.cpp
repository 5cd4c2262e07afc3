#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "msvc/table.hpp"

using namespace msvc;

namespace {

Schema text_int_schema() {
  return Schema({Column{"name", ValueKind::text}, Column{"count", ValueKind::int_}});
}

std::vector<Row> sample_rows(int n) {
  std::vector<Row> rows;
  for (int i = 0; i < n; ++i)
    rows.push_back(Row{{Value::text("row" + std::to_string(i)), Value::integer(i)}});
  return rows;
}

}  // namespace

TEST_CASE("schema rejects duplicate and empty column names", "[table]") {
  CHECK_THROWS_AS(Schema({Column{"a", ValueKind::int_}, Column{"a", ValueKind::text}}), Error);
  CHECK_THROWS_AS(Schema({Column{"", ValueKind::int_}}), Error);
  Schema s = text_int_schema();
  CHECK(s.arity() == 2);
  CHECK(s.index_of("count") == 1);
  CHECK_FALSE(s.index_of("missing").has_value());
}

TEST_CASE("from_rows validates rows against the schema", "[table]") {
  Schema s = text_int_schema();
  CHECK_THROWS_AS(DataTable::from_rows({Row{{Value::text("x")}}}, s, 1), Error);  // arity
  CHECK_THROWS_AS(DataTable::from_rows({Row{{Value::integer(1), Value::integer(2)}}}, s, 1),
                  Error);  // kind
  // Null is allowed in any column.
  CHECK_NOTHROW(DataTable::from_rows({Row{{Value::null(), Value::null()}}}, s, 1));
  CHECK_THROWS_AS(DataTable::from_rows({}, s, 0), Error);  // no partitions
}

TEST_CASE("round-robin distribution fills partitions evenly", "[table]") {
  DataTable t = DataTable::from_rows(sample_rows(10), text_int_schema(), 3);
  REQUIRE(t.partition_count() == 3);
  CHECK(t.partition(0).size() == 4);  // rows 0,3,6,9
  CHECK(t.partition(1).size() == 3);  // rows 1,4,7
  CHECK(t.partition(2).size() == 3);  // rows 2,5,8
  CHECK(t.partition(0)[1].values[1].as_int() == 3);
  CHECK(t.partition(2)[0].values[1].as_int() == 2);
  CHECK(t.num_rows() == 10);

  DataTable empty = DataTable::from_rows({}, text_int_schema(), 4);
  CHECK(empty.partition_count() == 4);
  CHECK(empty.num_rows() == 0);
}

TEST_CASE("single-partition collect returns the input order exactly", "[table]") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    int n = static_cast<int>(rng() % 30);
    std::vector<Row> rows = sample_rows(n);
    DataTable t = DataTable::from_rows(rows, text_int_schema(), 1);
    CHECK(t.collect() == rows);
  }
}

TEST_CASE("repartition preserves the row multiset and balances sizes", "[table]") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    int n = static_cast<int>(rng() % 40);
    std::size_t p1 = 1 + rng() % 6;
    std::size_t p2 = 1 + rng() % 6;
    DataTable t = DataTable::from_rows(sample_rows(n), text_int_schema(), p1);
    DataTable r = t.repartition(p2);

    REQUIRE(r.partition_count() == p2);
    CHECK(r.num_rows() == t.num_rows());

    // Balance: sizes differ by at most one.
    std::size_t lo = SIZE_MAX, hi = 0;
    for (std::size_t i = 0; i < p2; ++i) {
      lo = std::min(lo, r.partition(i).size());
      hi = std::max(hi, r.partition(i).size());
    }
    CHECK(hi - lo <= 1);

    // Multiset preservation: sort both collections by the count column.
    auto key = [](const Row& row) { return row.values[1].as_int(); };
    std::vector<Row> a = t.collect();
    std::vector<Row> b = r.collect();
    std::sort(a.begin(), a.end(), [&](const Row& x, const Row& y) { return key(x) < key(y); });
    std::sort(b.begin(), b.end(), [&](const Row& x, const Row& y) { return key(x) < key(y); });
    CHECK(a == b);
  }
}

TEST_CASE("repartition redistributes round-robin from collect order", "[table]") {
  std::vector<Row> rows = sample_rows(12);
  DataTable t = DataTable::from_rows(rows, text_int_schema(), 4);

  // Merging to one partition is exactly the collect order.
  CHECK(t.repartition(1).partition(0) == t.collect());

  // Splitting a single partition matches building from the flat list directly.
  DataTable flat = DataTable::from_rows(rows, text_int_schema(), 1);
  DataTable split = flat.repartition(4);
  DataTable direct = DataTable::from_rows(rows, text_int_schema(), 4);
  for (std::size_t p = 0; p < 4; ++p) CHECK(split.partition(p) == direct.partition(p));
}

TEST_CASE("with_column appends values in collect order", "[table]") {
  DataTable t = DataTable::from_rows(sample_rows(5), text_int_schema(), 2);
  std::vector<Value> doubled;
  for (const Row& r : t.collect()) doubled.push_back(Value::integer(r.values[1].as_int() * 2));

  DataTable extended = t.with_column("doubled", ValueKind::int_, doubled);
  CHECK(extended.schema().arity() == 3);
  CHECK(extended.num_rows() == 5);
  std::vector<Value> read_back = extended.column_values("doubled");
  CHECK(read_back == doubled);
  // Pairing is row-aligned, not just multiset-equal.
  for (const Row& r : extended.collect())
    CHECK(r.values[2].as_int() == r.values[1].as_int() * 2);
  // The original is untouched.
  CHECK(t.schema().arity() == 2);
}

TEST_CASE("with_column rejects bad shapes", "[table]") {
  DataTable t = DataTable::from_rows(sample_rows(3), text_int_schema(), 1);
  CHECK_THROWS_AS(t.with_column("name", ValueKind::text, {Value::null(), Value::null(), Value::null()}),
                  Error);  // duplicate name
  CHECK_THROWS_AS(t.with_column("extra", ValueKind::int_, {Value::integer(1)}), Error);  // length
  CHECK_THROWS_AS(t.with_column("extra", ValueKind::int_,
                                {Value::text("x"), Value::null(), Value::null()}),
                  Error);  // kind
}

TEST_CASE("column_values raises for unknown columns", "[table]") {
  DataTable t = DataTable::from_rows(sample_rows(2), text_int_schema(), 1);
  CHECK_THROWS_AS(t.column_values("nope"), Error);
  CHECK(t.column_values("count").size() == 2);
}

TEST_CASE("jsonl loader maps keys by name with Null for gaps", "[table]") {
  std::istringstream in(R"({"name":"a","count":1,"ignored":true}
{"count":2}

{"name":"c"}
)");
  DataTable t = load_jsonl(in, text_int_schema(), 2);
  REQUIRE(t.num_rows() == 3);
  std::vector<Value> names = t.column_values("name");
  std::vector<Value> counts = t.column_values("count");
  // collect order after round-robin into 2 partitions: rows 0,2 then row 1
  CHECK(names[0] == Value::text("a"));
  CHECK(names[1] == Value::text("c"));
  CHECK(names[2].is_null());
  CHECK(counts[0] == Value::integer(1));
  CHECK(counts[1].is_null());
  CHECK(counts[2] == Value::integer(2));
}

TEST_CASE("jsonl loader widens Int into Float columns", "[table]") {
  Schema s({Column{"x", ValueKind::float_}});
  std::istringstream in(R"({"x":3}
{"x":2.5}
)");
  DataTable t = load_jsonl(in, s, 1);
  std::vector<Value> xs = t.column_values("x");
  CHECK(xs[0] == Value::real(3.0));
  CHECK(xs[1] == Value::real(2.5));
}

TEST_CASE("jsonl loader reports the offending line", "[table]") {
  std::istringstream bad_kind(R"({"name":"a","count":1}
{"name":"b","count":"two"}
)");
  try {
    load_jsonl(bad_kind, text_int_schema(), 1);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  std::istringstream not_object("[1,2]\n");
  CHECK_THROWS_AS(load_jsonl(not_object, text_int_schema(), 1), Error);

  std::istringstream broken("{\"name\": \n");
  CHECK_THROWS_AS(load_jsonl(broken, text_int_schema(), 1), Error);
}

TEST_CASE("load_jsonl_file raises io_error for missing files", "[table]") {
  try {
    load_jsonl_file("/definitely/not/here.jsonl", text_int_schema(), 1);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::io_error);
  }
}
