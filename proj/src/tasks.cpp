#include "tasks.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

#include "webrl/util.hpp"

namespace webrl {

using nlohmann::json;

namespace detail {

BidAllocator::BidAllocator(std::uint64_t seed, TaskType type)
    : next_(100 + static_cast<int>(mix64(seed, static_cast<std::uint64_t>(type) + 17) % 200)) {}

std::string BidAllocator::next() { return "a" + std::to_string(next_++); }

Element make_element(std::string bid, std::string role, std::string text, bool visible) {
  Element e;
  e.bid = std::move(bid);
  e.role = std::move(role);
  e.text = std::move(text);
  e.visible = visible;
  return e;
}

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::kInvalidConfig, msg); }

template <typename T>
T get_or_throw(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) invalid(std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    invalid(std::string("bad value for '") + key + "': " + e.what());
  }
}

Element with_value(Element e, std::string value) {
  e.value = std::move(value);
  e.has_value = true;
  return e;
}

bool is_int(const std::string& s, long& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

bool cell_less(const std::string& a, const std::string& b) {
  long x, y;
  if (is_int(a, x) && is_int(b, y)) return x < y;
  return a < b;
}

Action act(std::string name, std::vector<std::string> params) { return Action{std::move(name), std::move(params)}; }

// ---------------------------------------------------------------------------
// Form: fill a new-record form and submit it.

class FormTask final : public TaskModel {
 public:
  explicit FormTask(const TaskConfig& c) {
    table_ = get_or_throw<std::string>(c.params, "table");
    labels_ = get_or_throw<std::vector<std::string>>(c.params, "fields");
    auto targets = get_or_throw<std::vector<std::pair<std::string, std::string>>>(c.targets, "fields");
    if (labels_.empty()) invalid("form without fields");
    if (targets.empty()) invalid("form task without target fields");
    std::set<std::string> uniq(labels_.begin(), labels_.end());
    if (uniq.size() != labels_.size()) invalid("duplicate form field labels");
    for (const auto& [label, value] : targets) {
      if (!uniq.count(label)) invalid("target field '" + label + "' is not on the form");
      if (value.empty()) invalid("empty target value for '" + label + "'");
      targets_[label] = value;
    }
    BidAllocator bids(c.seed, c.type);
    init_chrome(bids, "New " + table_ + " record");
    heading_bid_ = bids.next();
    form_bid_ = bids.next();
    for (size_t i = 0; i < labels_.size(); ++i) field_bids_.push_back(bids.next());
    submit_bid_ = bids.next();
    status_bid_ = bids.next();
    values_.assign(labels_.size(), "");
    target_order_ = targets;
  }

  std::unique_ptr<TaskModel> clone() const override { return std::make_unique<FormTask>(*this); }

  void apply(const Action& a, const Element* target) override {
    if (!target) return;
    auto field = std::find(field_bids_.begin(), field_bids_.end(), target->bid);
    if (a.name == "fill" && field != field_bids_.end()) {
      values_[field - field_bids_.begin()] = a.params[1];
    } else if ((a.name == "click" && target->bid == submit_bid_) ||
               (a.name == "press" && field != field_bids_.end() && a.params[1] == "Enter")) {
      submitted_.push_back(values_);
    }
  }

  bool success() const override {
    for (const auto& rec : submitted_) {
      bool ok = true;
      for (size_t i = 0; i < labels_.size(); ++i) {
        auto it = targets_.find(labels_[i]);
        if (it != targets_.end() && rec[i] != it->second) ok = false;
      }
      if (ok) return true;
    }
    return false;
  }

  std::vector<Action> oracle() const override {
    std::vector<Action> out;
    for (size_t i = 0; i < labels_.size(); ++i) {
      auto it = targets_.find(labels_[i]);
      if (it != targets_.end()) out.push_back(act("fill", {field_bids_[i], it->second}));
    }
    out.push_back(act("click", {submit_bid_}));
    return out;
  }

  json app_state() const override {
    json fields = json::object();
    for (size_t i = 0; i < labels_.size(); ++i) fields[labels_[i]] = values_[i];
    return {{"fields", fields}, {"submitted", submitted_}};
  }

 protected:
  std::vector<Element> render_main() const override {
    std::vector<Element> out;
    out.push_back(make_element(heading_bid_, "heading", "New " + table_ + " record"));
    Element form = make_element(form_bid_, "form", table_ + " form");
    for (size_t i = 0; i < labels_.size(); ++i) {
      form.children.push_back(with_value(make_element(field_bids_[i], "textbox", labels_[i]), values_[i]));
    }
    form.children.push_back(make_element(submit_bid_, "button", "Submit"));
    out.push_back(std::move(form));
    if (!submitted_.empty()) {
      out.push_back(make_element(status_bid_, "StaticText", "Record " + std::to_string(submitted_.size()) + " created"));
    }
    return out;
  }

 private:
  std::string table_;
  std::vector<std::string> labels_;
  std::map<std::string, std::string> targets_;
  std::vector<std::pair<std::string, std::string>> target_order_;
  std::string heading_bid_, form_bid_, submit_bid_, status_bid_;
  std::vector<std::string> field_bids_;
  std::vector<std::string> values_;
  std::vector<std::vector<std::string>> submitted_;
};

// ---------------------------------------------------------------------------
// Shared list page for the sort and filter tasks.

struct ListData {
  std::string table;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::string table_bid, header_row_bid;
  std::vector<std::string> header_bids;
  std::vector<std::string> row_bids;
  std::vector<std::vector<std::string>> cell_bids;

  void load(const TaskConfig& c) {
    table = get_or_throw<std::string>(c.params, "table");
    columns = get_or_throw<std::vector<std::string>>(c.params, "columns");
    rows = get_or_throw<std::vector<std::vector<std::string>>>(c.params, "rows");
    if (columns.empty()) invalid("list without columns");
    std::set<std::string> uniq(columns.begin(), columns.end());
    if (uniq.size() != columns.size()) invalid("duplicate column names");
    for (const auto& r : rows) {
      if (r.size() != columns.size()) invalid("row width does not match the column count");
    }
  }

  void allocate(BidAllocator& bids) {
    table_bid = bids.next();
    header_row_bid = bids.next();
    for (size_t i = 0; i < columns.size(); ++i) header_bids.push_back(bids.next());
  }

  void allocate_rows(BidAllocator& bids) {
    for (size_t r = 0; r < rows.size(); ++r) {
      row_bids.push_back(bids.next());
      cell_bids.emplace_back();
      for (size_t i = 0; i < columns.size(); ++i) cell_bids.back().push_back(bids.next());
    }
  }

  int column_index(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
  }

  Element render_rows(Element table_el, const std::vector<size_t>& order) const {
    for (size_t r : order) {
      Element row = make_element(row_bids[r], "row", "");
      for (size_t i = 0; i < columns.size(); ++i) {
        row.children.push_back(make_element(cell_bids[r][i], "cell", rows[r][i]));
      }
      table_el.children.push_back(std::move(row));
    }
    return table_el;
  }
};

class SortTask final : public TaskModel {
 public:
  explicit SortTask(const TaskConfig& c) {
    list_.load(c);
    target_column_ = get_or_throw<std::string>(c.targets, "column");
    target_order_ = get_or_throw<std::string>(c.targets, "order");
    if (list_.column_index(target_column_) < 0) invalid("sort column '" + target_column_ + "' does not exist");
    if (target_order_ != "ascending" && target_order_ != "descending") invalid("bad sort order '" + target_order_ + "'");
    BidAllocator bids(c.seed, c.type);
    init_chrome(bids, list_.table + " list");
    heading_bid_ = bids.next();
    list_.allocate(bids);
    for (size_t i = 0; i < list_.columns.size(); ++i) {
      menu_bids_.push_back(bids.next());
      asc_bids_.push_back(bids.next());
      desc_bids_.push_back(bids.next());
    }
    list_.allocate_rows(bids);
  }

  std::unique_ptr<TaskModel> clone() const override { return std::make_unique<SortTask>(*this); }

  void apply(const Action& a, const Element* target) override {
    if (!target || a.name != "click") return;
    for (size_t i = 0; i < list_.columns.size(); ++i) {
      if (target->bid == list_.header_bids[i]) {
        open_menu_ = open_menu_ == static_cast<int>(i) ? -1 : static_cast<int>(i);
        return;
      }
      if (target->bid == asc_bids_[i] || target->bid == desc_bids_[i]) {
        sort_column_ = list_.columns[i];
        sort_order_ = target->bid == asc_bids_[i] ? "ascending" : "descending";
        open_menu_ = -1;
        return;
      }
    }
  }

  bool success() const override { return sort_column_ == target_column_ && sort_order_ == target_order_; }

  std::vector<Action> oracle() const override {
    int i = list_.column_index(target_column_);
    const auto& item = target_order_ == "ascending" ? asc_bids_[i] : desc_bids_[i];
    return {act("click", {list_.header_bids[i]}), act("click", {item})};
  }

  json app_state() const override {
    return {{"sort_column", sort_column_}, {"sort_order", sort_order_}, {"open_menu", open_menu_}};
  }

 protected:
  std::vector<Element> render_main() const override {
    std::vector<Element> out;
    out.push_back(make_element(heading_bid_, "heading", list_.table + " list"));
    Element table = make_element(list_.table_bid, "table", list_.table + " table");
    Element header = make_element(list_.header_row_bid, "row", "");
    for (size_t i = 0; i < list_.columns.size(); ++i) {
      Element h = make_element(list_.header_bids[i], "columnheader", list_.columns[i]);
      if (open_menu_ == static_cast<int>(i)) {
        Element menu = make_element(menu_bids_[i], "menu", list_.columns[i] + " menu");
        menu.children.push_back(make_element(asc_bids_[i], "menuitem", "Sort ascending"));
        menu.children.push_back(make_element(desc_bids_[i], "menuitem", "Sort descending"));
        h.children.push_back(std::move(menu));
      }
      header.children.push_back(std::move(h));
    }
    table.children.push_back(std::move(header));
    std::vector<size_t> order(list_.rows.size());
    for (size_t r = 0; r < order.size(); ++r) order[r] = r;
    int col = list_.column_index(sort_column_);
    if (col >= 0) {
      bool asc = sort_order_ == "ascending";
      std::stable_sort(order.begin(), order.end(), [&](size_t x, size_t y) {
        return asc ? cell_less(list_.rows[x][col], list_.rows[y][col])
                   : cell_less(list_.rows[y][col], list_.rows[x][col]);
      });
    }
    out.push_back(list_.render_rows(std::move(table), order));
    return out;
  }

 private:
  ListData list_;
  std::string target_column_, target_order_;
  std::string heading_bid_;
  std::vector<std::string> menu_bids_, asc_bids_, desc_bids_;
  int open_menu_ = -1;
  std::string sort_column_, sort_order_;
};

class FilterTask final : public TaskModel {
 public:
  static constexpr int kMaxConditions = 3;

  explicit FilterTask(const TaskConfig& c) {
    list_.load(c);
    clauses_ = get_or_throw<std::vector<std::pair<std::string, std::string>>>(c.targets, "clauses");
    if (clauses_.empty()) invalid("filter task without clauses");
    if (clauses_.size() > static_cast<size_t>(kMaxConditions)) invalid("too many filter clauses");
    for (const auto& [col, val] : clauses_) {
      if (list_.column_index(col) < 0) invalid("filter column '" + col + "' does not exist");
      if (val.empty()) invalid("empty filter value");
    }
    BidAllocator bids(c.seed, c.type);
    init_chrome(bids, list_.table + " list");
    heading_bid_ = bids.next();
    filter_bid_ = bids.next();
    panel_bid_ = bids.next();
    for (int i = 0; i < kMaxConditions; ++i) {
      Condition cond;
      cond.field_bid = bids.next();
      for (size_t k = 0; k < list_.columns.size(); ++k) cond.option_bids.push_back(bids.next());
      cond.value_bid = bids.next();
      conditions_.push_back(cond);
    }
    and_bid_ = bids.next();
    run_bid_ = bids.next();
    list_.allocate(bids);
    list_.allocate_rows(bids);
  }

  std::unique_ptr<TaskModel> clone() const override { return std::make_unique<FilterTask>(*this); }

  void apply(const Action& a, const Element* target) override {
    if (!target) return;
    const std::string& bid = target->bid;
    if (a.name == "click" && bid == filter_bid_) {
      panel_open_ = !panel_open_;
      return;
    }
    if (!panel_open_) return;
    if (a.name == "click" && bid == and_bid_) {
      if (shown_ < kMaxConditions) ++shown_;
      return;
    }
    if (a.name == "click" && bid == run_bid_) {
      run();
      return;
    }
    for (int i = 0; i < shown_; ++i) {
      auto& cond = conditions_[i];
      if (a.name == "select_option" && bid == cond.field_bid && list_.column_index(a.params[1]) >= 0) {
        cond.field = a.params[1];
      } else if (a.name == "fill" && bid == cond.value_bid) {
        cond.value = a.params[1];
      } else if (a.name == "press" && bid == cond.value_bid && a.params[1] == "Enter") {
        run();
      }
    }
  }

  bool success() const override {
    auto want = clauses_;
    auto got = applied_;
    std::sort(want.begin(), want.end());
    std::sort(got.begin(), got.end());
    return want == got;
  }

  std::vector<Action> oracle() const override {
    std::vector<Action> out{act("click", {filter_bid_})};
    for (size_t i = 0; i < clauses_.size(); ++i) {
      if (i > 0) out.push_back(act("click", {and_bid_}));
      out.push_back(act("select_option", {conditions_[i].field_bid, clauses_[i].first}));
      out.push_back(act("fill", {conditions_[i].value_bid, clauses_[i].second}));
    }
    out.push_back(act("click", {run_bid_}));
    return out;
  }

  json app_state() const override {
    json conds = json::array();
    for (int i = 0; i < shown_; ++i) conds.push_back({conditions_[i].field, conditions_[i].value});
    return {{"panel_open", panel_open_}, {"conditions", conds}, {"applied", applied_}};
  }

 protected:
  std::vector<Element> render_main() const override {
    std::vector<Element> out;
    out.push_back(make_element(heading_bid_, "heading", list_.table + " list"));
    out.push_back(make_element(filter_bid_, "button", "Filter"));
    if (panel_open_) {
      Element panel = make_element(panel_bid_, "group", "Filter conditions");
      for (int i = 0; i < shown_; ++i) {
        const auto& cond = conditions_[i];
        std::string n = std::to_string(i + 1);
        Element field = with_value(make_element(cond.field_bid, "combobox", "Field " + n), cond.field);
        for (size_t k = 0; k < list_.columns.size(); ++k) {
          field.children.push_back(make_element(cond.option_bids[k], "option", list_.columns[k]));
        }
        panel.children.push_back(std::move(field));
        panel.children.push_back(with_value(make_element(cond.value_bid, "textbox", "Value " + n), cond.value));
      }
      panel.children.push_back(make_element(and_bid_, "button", "AND", shown_ < kMaxConditions));
      panel.children.push_back(make_element(run_bid_, "button", "Run"));
      out.push_back(std::move(panel));
    }
    Element table = make_element(list_.table_bid, "table", list_.table + " table");
    Element header = make_element(list_.header_row_bid, "row", "");
    for (size_t i = 0; i < list_.columns.size(); ++i) {
      header.children.push_back(make_element(list_.header_bids[i], "columnheader", list_.columns[i]));
    }
    table.children.push_back(std::move(header));
    std::vector<size_t> order;
    for (size_t r = 0; r < list_.rows.size(); ++r) {
      bool keep = true;
      for (const auto& [col, val] : applied_) {
        if (list_.rows[r][list_.column_index(col)] != val) keep = false;
      }
      if (keep) order.push_back(r);
    }
    out.push_back(list_.render_rows(std::move(table), order));
    return out;
  }

 private:
  struct Condition {
    std::string field_bid, value_bid;
    std::vector<std::string> option_bids;
    std::string field, value;
  };

  void run() {
    applied_.clear();
    for (int i = 0; i < shown_; ++i) {
      if (!conditions_[i].field.empty() && !conditions_[i].value.empty()) {
        applied_.emplace_back(conditions_[i].field, conditions_[i].value);
      }
    }
    panel_open_ = false;
  }

  ListData list_;
  std::vector<std::pair<std::string, std::string>> clauses_;
  std::string heading_bid_, filter_bid_, panel_bid_, and_bid_, run_bid_;
  std::vector<Condition> conditions_;
  bool panel_open_ = false;
  int shown_ = 1;
  std::vector<std::pair<std::string, std::string>> applied_;
};

// ---------------------------------------------------------------------------
// Menu: expand a hierarchical application menu and open a leaf.

class MenuTask final : public TaskModel {
 public:
  explicit MenuTask(const TaskConfig& c) {
    if (!c.params.contains("tree") || !c.params["tree"].is_array() || c.params["tree"].empty()) {
      invalid("menu task without a tree");
    }
    target_ = get_or_throw<std::vector<std::string>>(c.targets, "path");
    if (target_.empty()) invalid("empty menu path");
    BidAllocator bids(c.seed, c.type);
    init_chrome(bids, "Application navigator");
    nav_bid_ = bids.next();
    location_bid_ = bids.next();
    for (const auto& n : c.params["tree"]) roots_.push_back(load(n, bids));
    std::set<std::string> labels;
    for (const auto& i : roots_) collect_labels(i, labels);
    // Resolve the target path; a missing or non-leaf node is unreachable.
    const std::vector<int>* level = &roots_;
    for (size_t d = 0; d < target_.size(); ++d) {
      int found = -1;
      for (int idx : *level) {
        if (nodes_[idx].label == target_[d]) found = idx;
      }
      if (found < 0) invalid("menu path names a missing node '" + target_[d] + "'");
      target_nodes_.push_back(found);
      level = &nodes_[found].children;
    }
    if (!nodes_[target_nodes_.back()].children.empty()) invalid("menu path does not end at a leaf");
  }

  std::unique_ptr<TaskModel> clone() const override { return std::make_unique<MenuTask>(*this); }

  void apply(const Action& a, const Element* target) override {
    if (!target || a.name != "click") return;
    for (size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].bid != target->bid) continue;
      if (nodes_[i].children.empty()) {
        location_ = path_to(static_cast<int>(i));
      } else {
        expanded_[i] = !expanded_[i];
      }
      return;
    }
  }

  bool success() const override { return location_ == target_; }

  std::vector<Action> oracle() const override {
    std::vector<Action> out;
    for (int idx : target_nodes_) out.push_back(act("click", {nodes_[idx].bid}));
    return out;
  }

  json app_state() const override {
    std::vector<std::string> open;
    for (size_t i = 0; i < nodes_.size(); ++i) {
      if (expanded_[i]) open.push_back(nodes_[i].label);
    }
    return {{"expanded", open}, {"location", location_}};
  }

 protected:
  std::vector<Element> render_main() const override {
    std::vector<Element> out;
    Element nav = make_element(nav_bid_, "navigation", "Application menu");
    for (int idx : roots_) nav.children.push_back(render_node(idx));
    out.push_back(std::move(nav));
    std::string where = location_.empty() ? std::string("Home") : location_.back();
    out.push_back(make_element(location_bid_, "heading", where));
    return out;
  }

 private:
  struct Node {
    std::string label, bid;
    int parent = -1;
    std::vector<int> children;
  };

  int load(const json& j, BidAllocator& bids, int parent = -1) {
    if (!j.contains("label")) invalid("menu node without label");
    int idx = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{j["label"].get<std::string>(), bids.next(), parent, {}});
    expanded_.push_back(false);
    if (j.contains("children")) {
      for (const auto& ch : j["children"]) {
        int child = load(ch, bids, idx);
        nodes_[idx].children.push_back(child);
      }
    }
    return idx;
  }

  void collect_labels(int idx, std::set<std::string>& seen) const {
    if (!seen.insert(nodes_[idx].label).second) invalid("duplicate menu label '" + nodes_[idx].label + "'");
    for (int ch : nodes_[idx].children) collect_labels(ch, seen);
  }

  std::vector<std::string> path_to(int idx) const {
    std::vector<std::string> p;
    for (int i = idx; i >= 0; i = nodes_[i].parent) p.push_back(nodes_[i].label);
    std::reverse(p.begin(), p.end());
    return p;
  }

  Element render_node(int idx) const {
    const Node& n = nodes_[idx];
    Element e = make_element(n.bid, n.children.empty() ? "link" : "button", n.label);
    if (expanded_[idx]) {
      for (int ch : n.children) e.children.push_back(render_node(ch));
    }
    return e;
  }

  std::vector<Node> nodes_;
  std::vector<int> roots_;
  std::vector<bool> expanded_;
  std::vector<std::string> target_;
  std::vector<int> target_nodes_;
  std::vector<std::string> location_;
  std::string nav_bid_, location_bid_;
};

// ---------------------------------------------------------------------------
// Service catalog: open an item, pick a quantity, order it.

class ServiceTask final : public TaskModel {
 public:
  explicit ServiceTask(const TaskConfig& c) {
    items_ = get_or_throw<std::vector<std::string>>(c.params, "items");
    max_qty_ = c.params.value("max_quantity", 5);
    target_item_ = get_or_throw<std::string>(c.targets, "item");
    target_qty_ = get_or_throw<std::string>(c.targets, "quantity");
    if (std::find(items_.begin(), items_.end(), target_item_) == items_.end()) {
      invalid("catalog item '" + target_item_ + "' is not offered");
    }
    long q;
    if (!is_int(target_qty_, q) || q < 1 || q > max_qty_) invalid("quantity '" + target_qty_ + "' out of range");
    BidAllocator bids(c.seed, c.type);
    init_chrome(bids, "Service catalog");
    heading_bid_ = bids.next();
    list_bid_ = bids.next();
    for (size_t i = 0; i < items_.size(); ++i) item_bids_.push_back(bids.next());
    qty_bid_ = bids.next();
    for (int i = 0; i < max_qty_; ++i) qty_option_bids_.push_back(bids.next());
    order_bid_ = bids.next();
    back_bid_ = bids.next();
    status_bid_ = bids.next();
  }

  std::unique_ptr<TaskModel> clone() const override { return std::make_unique<ServiceTask>(*this); }

  void apply(const Action& a, const Element* target) override {
    if (!target) return;
    if (open_item_ < 0) {
      auto it = std::find(item_bids_.begin(), item_bids_.end(), target->bid);
      if (a.name == "click" && it != item_bids_.end()) {
        open_item_ = static_cast<int>(it - item_bids_.begin());
        quantity_ = "1";
      }
      return;
    }
    long q;
    if (a.name == "select_option" && target->bid == qty_bid_ && is_int(a.params[1], q) && q >= 1 && q <= max_qty_) {
      quantity_ = a.params[1];
    } else if (a.name == "click" && target->bid == order_bid_) {
      orders_.emplace_back(items_[open_item_], quantity_);
    } else if (a.name == "click" && target->bid == back_bid_) {
      open_item_ = -1;
    }
  }

  bool success() const override {
    return orders_.size() == 1 && orders_[0].first == target_item_ && orders_[0].second == target_qty_;
  }

  std::vector<Action> oracle() const override {
    auto i = std::find(items_.begin(), items_.end(), target_item_) - items_.begin();
    return {act("click", {item_bids_[i]}), act("select_option", {qty_bid_, target_qty_}),
            act("click", {order_bid_})};
  }

  json app_state() const override {
    return {{"open_item", open_item_ < 0 ? std::string() : items_[open_item_]},
            {"quantity", quantity_},
            {"orders", orders_}};
  }

 protected:
  std::vector<Element> render_main() const override {
    std::vector<Element> out;
    if (open_item_ < 0) {
      out.push_back(make_element(heading_bid_, "heading", "Service catalog"));
      Element list = make_element(list_bid_, "list", "Catalog items");
      for (size_t i = 0; i < items_.size(); ++i) list.children.push_back(make_element(item_bids_[i], "link", items_[i]));
      out.push_back(std::move(list));
    } else {
      out.push_back(make_element(heading_bid_, "heading", items_[open_item_]));
      Element qty = with_value(make_element(qty_bid_, "combobox", "Quantity"), quantity_);
      for (int i = 0; i < max_qty_; ++i) {
        qty.children.push_back(make_element(qty_option_bids_[i], "option", std::to_string(i + 1)));
      }
      out.push_back(std::move(qty));
      out.push_back(make_element(order_bid_, "button", "Order Now"));
      out.push_back(make_element(back_bid_, "link", "Back to catalog"));
    }
    if (!orders_.empty()) out.push_back(make_element(status_bid_, "StaticText", "Order placed"));
    return out;
  }

 private:
  std::vector<std::string> items_;
  int max_qty_ = 5;
  std::string target_item_, target_qty_;
  std::string heading_bid_, list_bid_, qty_bid_, order_bid_, back_bid_, status_bid_;
  std::vector<std::string> item_bids_, qty_option_bids_;
  int open_item_ = -1;
  std::string quantity_ = "1";
  std::vector<std::pair<std::string, std::string>> orders_;
};

// ---------------------------------------------------------------------------
// Knowledge base: search, open an article, report one of its facts.

bool has_word(const std::string& text, const std::string& word) {
  for (const auto& w : split_words(text)) {
    if (w == word) return true;
  }
  return false;
}

class KnowledgeTask final : public TaskModel {
 public:
  explicit KnowledgeTask(const TaskConfig& c) {
    if (!c.params.contains("articles") || !c.params["articles"].is_array()) invalid("knowledge task without articles");
    for (const auto& a : c.params["articles"]) {
      Article art;
      art.title = get_or_throw<std::string>(a, "title");
      art.facts = get_or_throw<std::vector<std::pair<std::string, std::string>>>(a, "facts");
      articles_.push_back(std::move(art));
    }
    keyword_ = get_or_throw<std::string>(c.targets, "keyword");
    article_ = get_or_throw<std::string>(c.targets, "article");
    attribute_ = get_or_throw<std::string>(c.targets, "attribute");
    answer_ = get_or_throw<std::string>(c.targets, "answer");
    int found = -1;
    for (size_t i = 0; i < articles_.size(); ++i) {
      if (articles_[i].title == article_) found = static_cast<int>(i);
    }
    if (found < 0) invalid("target article '" + article_ + "' does not exist");
    if (!has_word(article_, keyword_)) invalid("keyword does not retrieve the target article");
    bool fact_ok = false;
    for (const auto& [k, v] : articles_[found].facts) {
      if (k == attribute_ && v == answer_) fact_ok = true;
    }
    if (!fact_ok) invalid("answer is not stated in the target article");

    BidAllocator bids(c.seed, c.type);
    init_chrome(bids, "Knowledge base");
    heading_bid_ = bids.next();
    search_bid_ = bids.next();
    button_bid_ = bids.next();
    results_bid_ = bids.next();
    for (auto& art : articles_) {
      art.link_bid = bids.next();
      art.table_bid = bids.next();
      for (size_t i = 0; i < art.facts.size(); ++i) {
        art.row_bids.push_back(bids.next());
        art.key_bids.push_back(bids.next());
        art.val_bids.push_back(bids.next());
      }
    }
    back_bid_ = bids.next();
  }

  std::unique_ptr<TaskModel> clone() const override { return std::make_unique<KnowledgeTask>(*this); }

  void apply(const Action& a, const Element* target) override {
    if (a.name == "send_msg_to_user") {
      messages_.push_back(a.params[0]);
      return;
    }
    if (!target) return;
    if (a.name == "fill" && target->bid == search_bid_) {
      query_ = a.params[1];
    } else if ((a.name == "press" && target->bid == search_bid_ && a.params[1] == "Enter") ||
               (a.name == "click" && target->bid == button_bid_)) {
      searched_ = query_;
      open_article_ = -1;
    } else if (a.name == "click" && target->bid == back_bid_) {
      open_article_ = -1;
    } else if (a.name == "click") {
      for (size_t i = 0; i < articles_.size(); ++i) {
        if (articles_[i].link_bid == target->bid) open_article_ = static_cast<int>(i);
      }
    }
  }

  bool success() const override { return !messages_.empty() && trim_copy(messages_.back()) == answer_; }

  std::vector<Action> oracle() const override {
    std::string link;
    for (const auto& art : articles_) {
      if (art.title == article_) link = art.link_bid;
    }
    return {act("fill", {search_bid_, keyword_}), act("press", {search_bid_, "Enter"}), act("click", {link}),
            act("send_msg_to_user", {answer_})};
  }

  json app_state() const override {
    return {{"query", query_},
            {"searched", searched_},
            {"open_article", open_article_ < 0 ? std::string() : articles_[open_article_].title},
            {"messages", messages_}};
  }

 protected:
  std::vector<Element> render_main() const override {
    std::vector<Element> out;
    out.push_back(make_element(heading_bid_, "heading", "Knowledge base"));
    out.push_back(with_value(make_element(search_bid_, "searchbox", "Search knowledge"), query_));
    out.push_back(make_element(button_bid_, "button", "Search"));
    if (open_article_ >= 0) {
      const auto& art = articles_[open_article_];
      Element table = make_element(art.table_bid, "table", art.title);
      for (size_t i = 0; i < art.facts.size(); ++i) {
        Element row = make_element(art.row_bids[i], "row", "");
        row.children.push_back(make_element(art.key_bids[i], "cell", art.facts[i].first));
        row.children.push_back(make_element(art.val_bids[i], "cell", art.facts[i].second));
        table.children.push_back(std::move(row));
      }
      out.push_back(std::move(table));
      out.push_back(make_element(back_bid_, "link", "Back to results"));
    } else if (!searched_.empty()) {
      Element results = make_element(results_bid_, "list", "Search results");
      for (const auto& art : articles_) {
        if (has_word(art.title, searched_)) results.children.push_back(make_element(art.link_bid, "link", art.title));
      }
      out.push_back(std::move(results));
    }
    return out;
  }

 private:
  struct Article {
    std::string title;
    std::vector<std::pair<std::string, std::string>> facts;
    std::string link_bid, table_bid;
    std::vector<std::string> row_bids, key_bids, val_bids;
  };

  std::vector<Article> articles_;
  std::string keyword_, article_, attribute_, answer_;
  std::string heading_bid_, search_bid_, button_bid_, results_bid_, back_bid_;
  std::string query_, searched_;
  int open_article_ = -1;
  std::vector<std::string> messages_;
};

// ---------------------------------------------------------------------------
// Dashboard: read a value off a chart (rendered as its data table).

class DashboardTask final : public TaskModel {
 public:
  explicit DashboardTask(const TaskConfig& c) {
    chart_ = get_or_throw<std::string>(c.params, "chart");
    rows_ = get_or_throw<std::vector<std::pair<std::string, std::string>>>(c.params, "rows");
    label_ = get_or_throw<std::string>(c.targets, "label");
    answer_ = get_or_throw<std::string>(c.targets, "answer");
    bool ok = false;
    std::set<std::string> labels;
    for (const auto& [l, v] : rows_) {
      if (!labels.insert(l).second) invalid("duplicate chart label '" + l + "'");
      if (l == label_ && v == answer_) ok = true;
    }
    if (!ok) invalid("chart does not show '" + label_ + "' = '" + answer_ + "'");
    BidAllocator bids(c.seed, c.type);
    init_chrome(bids, "Dashboard");
    heading_bid_ = bids.next();
    table_bid_ = bids.next();
    for (size_t i = 0; i < rows_.size(); ++i) {
      row_bids_.push_back(bids.next());
      label_bids_.push_back(bids.next());
      value_bids_.push_back(bids.next());
    }
  }

  std::unique_ptr<TaskModel> clone() const override { return std::make_unique<DashboardTask>(*this); }

  void apply(const Action& a, const Element*) override {
    if (a.name == "send_msg_to_user") messages_.push_back(a.params[0]);
  }

  bool success() const override { return !messages_.empty() && trim_copy(messages_.back()) == answer_; }

  std::vector<Action> oracle() const override { return {act("send_msg_to_user", {answer_})}; }

  json app_state() const override { return {{"messages", messages_}}; }

 protected:
  std::vector<Element> render_main() const override {
    std::vector<Element> out;
    out.push_back(make_element(heading_bid_, "heading", "Dashboard"));
    Element table = make_element(table_bid_, "table", chart_);
    for (size_t i = 0; i < rows_.size(); ++i) {
      Element row = make_element(row_bids_[i], "row", "");
      row.children.push_back(make_element(label_bids_[i], "cell", rows_[i].first));
      row.children.push_back(make_element(value_bids_[i], "cell", rows_[i].second));
      table.children.push_back(std::move(row));
    }
    out.push_back(std::move(table));
    return out;
  }

 private:
  std::string chart_;
  std::vector<std::pair<std::string, std::string>> rows_;
  std::string label_, answer_;
  std::string heading_bid_, table_bid_;
  std::vector<std::string> row_bids_, label_bids_, value_bids_;
  std::vector<std::string> messages_;
};

}  // namespace

std::unique_ptr<TaskModel> make_task_model(const TaskConfig& config) {
  switch (config.type) {
    case TaskType::kDashboard: return std::make_unique<DashboardTask>(config);
    case TaskType::kForm: return std::make_unique<FormTask>(config);
    case TaskType::kKnowledge: return std::make_unique<KnowledgeTask>(config);
    case TaskType::kFilter: return std::make_unique<FilterTask>(config);
    case TaskType::kSort: return std::make_unique<SortTask>(config);
    case TaskType::kMenu: return std::make_unique<MenuTask>(config);
    case TaskType::kService: return std::make_unique<ServiceTask>(config);
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown task type");
}

}  // namespace detail

void TaskModel::init_chrome(detail::BidAllocator& bids, std::string title) {
  title_ = std::move(title);
  nav_bid_ = bids.next();
  all_bid_ = bids.next();
  help_bid_ = bids.next();
  skip_bid_ = bids.next();
  main_bid_ = bids.next();
}

Element TaskModel::render() const {
  using detail::make_element;
  Element root;
  root.role = "RootWebArea";
  root.text = title_;
  Element nav = make_element(nav_bid_, "navigation", "Global navigation");
  nav.children.push_back(make_element(all_bid_, "button", "All"));
  nav.children.push_back(make_element(help_bid_, "button", "Help"));
  nav.children.push_back(make_element(skip_bid_, "link", "Skip to main content", false));
  root.children.push_back(std::move(nav));
  Element main = make_element(main_bid_, "main", "");
  main.children = render_main();
  root.children.push_back(std::move(main));
  return root;
}

}  // namespace webrl
