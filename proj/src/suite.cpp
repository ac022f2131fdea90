#include "webrl/suite.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "webrl/util.hpp"

namespace webrl {

using nlohmann::json;

std::string_view to_string(Split s) { return s == Split::kTrain ? "train" : "test"; }

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  throw Error(ErrorCode::kInvalidConfig, "unknown split '" + std::string(s) + "'");
}

const CategorySpec& TaskSuite::category(TaskType t) const {
  for (const auto& c : categories) {
    if (c.type == t) return c;
  }
  throw Error(ErrorCode::kInvalidConfig, "suite has no '" + std::string(to_string(t)) + "' category");
}

std::vector<TaskConfig> TaskSuite::configs(Split split) const {
  std::vector<TaskConfig> out;
  for (const auto& c : categories) {
    for (auto seed : split == Split::kTrain ? c.train_seeds : c.test_seeds) out.push_back(generate_config(c, seed));
  }
  return out;
}

namespace {

const char* kDefaultPools = R"json({
  "form": {
    "tables": ["incident", "problem", "change", "request"],
    "fields": ["Caller", "Category", "Description", "Location", "Impact"],
    "values": {
      "Caller": ["Alice", "Bob", "Carol", "David", "Erin", "Frank", "Grace", "Heidi", "Ivan", "Judy"],
      "Category": ["Network", "Hardware", "Software", "Database", "Inquiry"],
      "Description": ["Email outage", "VPN down", "Printer jam", "Slow laptop", "Password reset",
                      "Disk full", "Screen flicker", "Login failure"],
      "Location": ["Paris", "London", "Berlin", "Madrid", "Tokyo", "Austin"],
      "Impact": ["High", "Medium", "Low"]
    },
    "min_targets": 2,
    "max_targets": 4
  },
  "list": {
    "tables": ["incident", "problem", "change"],
    "columns": ["Number", "Priority", "State", "Assigned", "Category"],
    "values": {
      "Priority": ["Critical", "High", "Moderate", "Low", "Planning"],
      "State": ["New", "Active", "Paused", "Resolved", "Closed"],
      "Assigned": ["Alice", "Bob", "Carol", "David", "Erin", "Frank", "Grace", "Heidi"],
      "Category": ["Network", "Hardware", "Software", "Database", "Inquiry"]
    },
    "rows": 5,
    "visible_columns": 4,
    "max_clauses": 2
  },
  "menu": {
    "top": ["Incident", "Problem", "Change", "Knowledge", "Catalog", "Reports", "Assets", "Users"],
    "child": ["Open", "Closed", "Create New", "Assigned to me", "Overview", "Pending", "Archived",
              "Templates", "Settings", "Search", "Dashboards", "Scheduled"],
    "grandchild": ["Today", "This week", "Last month", "Critical", "Unassigned", "Escalated",
                   "My group", "Drafts"],
    "top_count": 4,
    "children_per_top": 3,
    "grandchildren": 2
  },
  "service": {
    "items": ["Laptop", "Monitor", "Keyboard", "Mouse", "Headset", "Tablet", "Printer", "Webcam",
              "Dock", "Phone"],
    "shown": 5,
    "max_quantity": 5
  },
  "knowledge": {
    "topics": ["VPN", "Email", "Printer", "Password", "Wifi", "Laptop", "Badge", "Phone"],
    "titles": ["{T} setup guide", "{T} troubleshooting tips", "{T} access policy"],
    "attributes": {
      "Owner": ["Alice", "Bob", "Carol", "David", "Erin", "Frank"],
      "Version": ["1", "2", "3", "4", "5", "6"],
      "Team": ["Network", "Desktop", "Security", "Support"],
      "Region": ["EMEA", "APAC", "Americas"]
    },
    "topics_per_page": 2,
    "facts_per_article": 3
  },
  "dashboard": {
    "charts": {
      "Incidents by category": ["Network", "Hardware", "Software", "Database", "Inquiry"],
      "Requests by state": ["New", "Active", "Paused", "Resolved", "Closed"],
      "Changes by team": ["Network", "Desktop", "Security", "Support"]
    },
    "max_value": 60
  }
})json";

const json& default_pools() {
  static const json pools = json::parse(kDefaultPools);
  return pools;
}

std::vector<std::string> strings(const json& j) { return j.get<std::vector<std::string>>(); }

// Picks k distinct entries keeping their pool order.
std::vector<std::string> pick_ordered(Rng& rng, const std::vector<std::string>& pool, size_t k) {
  std::vector<size_t> idx(pool.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.shuffle(idx);
  idx.resize(std::min(k, idx.size()));
  std::sort(idx.begin(), idx.end());
  std::vector<std::string> out;
  for (size_t i : idx) out.push_back(pool[i]);
  return out;
}

std::vector<std::string> pick_distinct(Rng& rng, std::vector<std::string> pool, size_t k) {
  rng.shuffle(pool);
  pool.resize(std::min(k, pool.size()));
  return pool;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

// "A 'x'", "A 'x' and B 'y'", "A 'x', B 'y' and C 'z'"
std::string enumerate(const std::vector<std::string>& items) {
  if (items.size() == 1) return items[0];
  std::vector<std::string> head(items.begin(), items.end() - 1);
  return join(head, ", ") + " and " + items.back();
}

// --- form -----------------------------------------------------------------

std::string form_goal(const json& params, const json& targets) {
  std::vector<std::string> parts;
  for (const auto& t : targets["fields"]) {
    parts.push_back(t[0].get<std::string>() + " '" + t[1].get<std::string>() + "'");
  }
  return "Create a new " + params["table"].get<std::string>() + " record with " + enumerate(parts) + ".";
}

TaskConfig gen_form(const json& pools, Rng& rng, std::uint64_t seed) {
  TaskConfig c;
  c.type = TaskType::kForm;
  c.seed = seed;
  auto fields = strings(pools["fields"]);
  size_t lo = pools.value("min_targets", 2), hi = pools.value("max_targets", 4);
  size_t k = lo + rng.index(hi - lo + 1);
  auto chosen = pick_ordered(rng, fields, k);
  c.params = {{"table", rng.pick(strings(pools["tables"]))}, {"fields", fields}};
  json t = json::array();
  for (const auto& label : chosen) t.push_back({label, rng.pick(strings(pools["values"][label]))});
  c.targets = {{"fields", t}};
  c.goal = form_goal(c.params, c.targets);
  return c;
}

TaskConfig resample_form(const TaskConfig& in, const json& pools, Rng& rng) {
  TaskConfig c = in;
  for (auto& t : c.targets["fields"]) {
    auto pool = strings(pools["values"][t[0].get<std::string>()]);
    t[1] = rng.pick(pool);
  }
  c.goal = form_goal(c.params, c.targets);
  return c;
}

// --- lists (sort and filter) ------------------------------------------------

std::vector<std::vector<std::string>> gen_rows(const json& pools, Rng& rng, const std::vector<std::string>& columns) {
  int n = pools.value("rows", 5);
  std::vector<std::vector<std::string>> rows;
  int number = 1000 + static_cast<int>(rng.index(8000));
  for (int r = 0; r < n; ++r) {
    std::vector<std::string> row;
    number += 1 + static_cast<int>(rng.index(40));
    for (const auto& col : columns) {
      if (col == "Number") {
        row.push_back(std::to_string(number));
      } else {
        row.push_back(rng.pick(strings(pools["values"][col])));
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json gen_list_params(const json& pools, Rng& rng) {
  auto all = strings(pools["columns"]);
  // Number is always the first column; the rest are a seeded ordered subset.
  std::vector<std::string> rest(all.begin() + 1, all.end());
  auto cols = pick_ordered(rng, rest, pools.value("visible_columns", 4) - 1);
  cols.insert(cols.begin(), all[0]);
  return {{"table", rng.pick(strings(pools["tables"]))}, {"columns", cols}, {"rows", gen_rows(pools, rng, cols)}};
}

std::string sort_goal(const json& params, const json& targets) {
  return "Sort the " + params["table"].get<std::string>() + " list by " + targets["column"].get<std::string>() +
         " in " + targets["order"].get<std::string>() + " order.";
}

TaskConfig gen_sort(const json& pools, Rng& rng, std::uint64_t seed) {
  TaskConfig c;
  c.type = TaskType::kSort;
  c.seed = seed;
  c.params = gen_list_params(pools, rng);
  auto cols = strings(c.params["columns"]);
  c.targets = {{"column", cols[rng.index(cols.size())]}, {"order", rng.index(2) ? "descending" : "ascending"}};
  c.goal = sort_goal(c.params, c.targets);
  return c;
}

TaskConfig resample_sort(const TaskConfig& in, const json& pools, Rng& rng) {
  TaskConfig c = in;
  c.params["table"] = rng.pick(strings(pools["tables"]));
  c.params["rows"] = gen_rows(pools, rng, strings(c.params["columns"]));
  c.goal = sort_goal(c.params, c.targets);
  return c;
}

std::string filter_goal(const json& params, const json& targets) {
  std::vector<std::string> parts;
  for (const auto& cl : targets["clauses"]) {
    parts.push_back(cl[0].get<std::string>() + " is '" + cl[1].get<std::string>() + "'");
  }
  return "Filter the " + params["table"].get<std::string>() + " list to show records where " + join(parts, " and ") + ".";
}

json gen_clauses(Rng& rng, const json& params, const std::vector<size_t>& col_idx) {
  json cl = json::array();
  auto cols = strings(params["columns"]);
  auto rows = params["rows"].get<std::vector<std::vector<std::string>>>();
  for (size_t ci : col_idx) cl.push_back({cols[ci], rows[rng.index(rows.size())][ci]});
  return cl;
}

TaskConfig gen_filter(const json& pools, Rng& rng, std::uint64_t seed) {
  TaskConfig c;
  c.type = TaskType::kFilter;
  c.seed = seed;
  c.params = gen_list_params(pools, rng);
  size_t ncols = c.params["columns"].size();
  size_t m = 1 + rng.index(static_cast<size_t>(pools.value("max_clauses", 2)));
  // Filter on categorical columns only (index 0 is Number).
  std::vector<size_t> idx;
  for (size_t i = 1; i < ncols; ++i) idx.push_back(i);
  rng.shuffle(idx);
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  c.targets = {{"clauses", gen_clauses(rng, c.params, idx)}};
  c.goal = filter_goal(c.params, c.targets);
  return c;
}

TaskConfig resample_filter(const TaskConfig& in, const json& pools, Rng& rng) {
  TaskConfig c = in;
  c.params["table"] = rng.pick(strings(pools["tables"]));
  auto cols = strings(c.params["columns"]);
  c.params["rows"] = gen_rows(pools, rng, cols);
  std::vector<size_t> idx;
  for (const auto& cl : c.targets["clauses"]) {
    idx.push_back(std::find(cols.begin(), cols.end(), cl[0].get<std::string>()) - cols.begin());
  }
  c.targets["clauses"] = gen_clauses(rng, c.params, idx);
  c.goal = filter_goal(c.params, c.targets);
  return c;
}

// --- menu -------------------------------------------------------------------

std::string menu_goal(const json& targets) {
  return "Navigate to " + join(strings(targets["path"]), " > ") + " using the application menu.";
}

// Shape: tops x children, the first child of every top has `grandchildren` leaves.
json build_menu_tree(const json& pools, Rng& rng) {
  size_t tops = pools.value("top_count", 4), kids = pools.value("children_per_top", 3),
         grand = pools.value("grandchildren", 2);
  auto top = pick_distinct(rng, strings(pools["top"]), tops);
  auto child = pick_distinct(rng, strings(pools["child"]), tops * kids);
  auto gchild = pick_distinct(rng, strings(pools["grandchild"]), tops * grand);
  json tree = json::array();
  for (size_t t = 0; t < tops; ++t) {
    json node = {{"label", top[t]}, {"children", json::array()}};
    for (size_t k = 0; k < kids; ++k) {
      json ch = {{"label", child[t * kids + k]}};
      if (k == 0) {
        ch["children"] = json::array();
        for (size_t g = 0; g < grand; ++g) ch["children"].push_back({{"label", gchild[t * grand + g]}});
      }
      node["children"].push_back(ch);
    }
    tree.push_back(node);
  }
  return tree;
}

// Path encoded as child indices so that resampling can relabel it.
json path_labels(const json& tree, const std::vector<size_t>& idx) {
  json path = json::array();
  const json* level = &tree;
  for (size_t i : idx) {
    const json& node = (*level)[i];
    path.push_back(node["label"]);
    if (node.contains("children")) level = &node["children"];
  }
  return path;
}

TaskConfig gen_menu(const json& pools, Rng& rng, std::uint64_t seed) {
  TaskConfig c;
  c.type = TaskType::kMenu;
  c.seed = seed;
  c.params = {{"tree", build_menu_tree(pools, rng)}};
  size_t tops = c.params["tree"].size();
  size_t kids = c.params["tree"][0]["children"].size();
  std::vector<size_t> idx{rng.index(tops), rng.index(kids)};
  if (idx[1] == 0) idx.push_back(rng.index(c.params["tree"][idx[0]]["children"][0]["children"].size()));
  c.params["path_index"] = idx;
  c.targets = {{"path", path_labels(c.params["tree"], idx)}};
  c.goal = menu_goal(c.targets);
  return c;
}

TaskConfig resample_menu(const TaskConfig& in, const json& pools, Rng& rng) {
  TaskConfig c = in;
  c.params["tree"] = build_menu_tree(pools, rng);
  c.targets["path"] = path_labels(c.params["tree"], in.params["path_index"].get<std::vector<size_t>>());
  c.goal = menu_goal(c.targets);
  return c;
}

// --- service catalog ---------------------------------------------------------

std::string service_goal(const json& targets) {
  return "Order " + targets["quantity"].get<std::string>() + " " + targets["item"].get<std::string>() +
         " from the service catalog.";
}

TaskConfig gen_service(const json& pools, Rng& rng, std::uint64_t seed) {
  TaskConfig c;
  c.type = TaskType::kService;
  c.seed = seed;
  auto items = pick_ordered(rng, strings(pools["items"]), pools.value("shown", 5));
  int maxq = pools.value("max_quantity", 5);
  size_t target = rng.index(items.size());
  c.params = {{"items", items}, {"max_quantity", maxq}, {"target_index", target}};
  c.targets = {{"item", items[target]}, {"quantity", std::to_string(1 + rng.index(maxq))}};
  c.goal = service_goal(c.targets);
  return c;
}

TaskConfig resample_service(const TaskConfig& in, const json& pools, Rng& rng) {
  TaskConfig c = in;
  auto items = pick_ordered(rng, strings(pools["items"]), in.params["items"].size());
  c.params["items"] = items;
  c.targets["item"] = items[in.params["target_index"].get<size_t>()];
  c.goal = service_goal(c.targets);
  return c;
}

// --- knowledge base ----------------------------------------------------------

std::string knowledge_goal(const json& targets) {
  return "Search the knowledge base for '" + targets["keyword"].get<std::string>() + "' and report the " +
         targets["attribute"].get<std::string>() + " listed in '" + targets["article"].get<std::string>() + "'.";
}

struct KnowledgeLayout {
  size_t topic = 0, title = 0, fact = 0;
};

TaskConfig build_knowledge(const json& pools, Rng& rng, std::uint64_t seed, const KnowledgeLayout* layout) {
  TaskConfig c;
  c.type = TaskType::kKnowledge;
  c.seed = seed;
  size_t ntopics = pools.value("topics_per_page", 2), nfacts = pools.value("facts_per_article", 3);
  auto topics = pick_distinct(rng, strings(pools["topics"]), ntopics);
  auto titles = strings(pools["titles"]);
  std::vector<std::string> attr_names;
  for (auto it = pools["attributes"].begin(); it != pools["attributes"].end(); ++it) attr_names.push_back(it.key());
  json articles = json::array();
  for (const auto& topic : topics) {
    for (const auto& tpl : titles) {
      std::string title = tpl;
      title.replace(title.find("{T}"), 3, topic);
      json facts = json::array();
      for (const auto& attr : pick_ordered(rng, attr_names, nfacts)) {
        facts.push_back({attr, rng.pick(strings(pools["attributes"][attr]))});
      }
      articles.push_back({{"title", title}, {"facts", facts}});
    }
  }
  KnowledgeLayout l;
  if (layout) {
    l = *layout;
  } else {
    l.topic = rng.index(ntopics);
    l.title = rng.index(titles.size());
    l.fact = rng.index(nfacts);
  }
  const json& art = articles[l.topic * titles.size() + l.title];
  c.params = {{"articles", articles}, {"layout", {l.topic, l.title, l.fact}}};
  c.targets = {{"keyword", topics[l.topic]},
               {"article", art["title"]},
               {"attribute", art["facts"][l.fact][0]},
               {"answer", art["facts"][l.fact][1]}};
  c.goal = knowledge_goal(c.targets);
  return c;
}

TaskConfig gen_knowledge(const json& pools, Rng& rng, std::uint64_t seed) {
  return build_knowledge(pools, rng, seed, nullptr);
}

TaskConfig resample_knowledge(const TaskConfig& in, const json& pools, Rng& rng) {
  auto l = in.params["layout"].get<std::vector<size_t>>();
  KnowledgeLayout layout{l[0], l[1], l[2]};
  return build_knowledge(pools, rng, in.seed, &layout);
}

// --- dashboard -------------------------------------------------------------

std::string dashboard_goal(const json& params, const json& targets) {
  return "Report the value shown for '" + targets["label"].get<std::string>() + "' in the " +
         params["chart"].get<std::string>() + " chart.";
}

TaskConfig build_dashboard(const json& pools, Rng& rng, std::uint64_t seed, std::string chart, size_t target) {
  TaskConfig c;
  c.type = TaskType::kDashboard;
  c.seed = seed;
  auto labels = strings(pools["charts"][chart]);
  int maxv = pools.value("max_value", 60);
  json rows = json::array();
  for (const auto& l : labels) rows.push_back({l, std::to_string(1 + rng.index(maxv))});
  c.params = {{"chart", chart}, {"rows", rows}, {"target_index", target}};
  c.targets = {{"label", rows[target][0]}, {"answer", rows[target][1]}};
  c.goal = dashboard_goal(c.params, c.targets);
  return c;
}

TaskConfig gen_dashboard(const json& pools, Rng& rng, std::uint64_t seed) {
  std::vector<std::string> charts;
  for (auto it = pools["charts"].begin(); it != pools["charts"].end(); ++it) charts.push_back(it.key());
  std::string chart = rng.pick(charts);
  size_t target = rng.index(pools["charts"][chart].size());
  return build_dashboard(pools, rng, seed, chart, target);
}

TaskConfig resample_dashboard(const TaskConfig& in, const json& pools, Rng& rng) {
  return build_dashboard(pools, rng, in.seed, in.params["chart"].get<std::string>(),
                         in.params["target_index"].get<size_t>());
}

const json& pools_for(const CategorySpec& cat) {
  if (!cat.pools.is_null() && !cat.pools.empty()) return cat.pools;
  const json& d = default_pools();
  switch (cat.type) {
    case TaskType::kSort:
    case TaskType::kFilter: return d["list"];
    default: return d[std::string(to_string(cat.type))];
  }
}

}  // namespace

TaskConfig generate_config(const CategorySpec& cat, std::uint64_t seed) {
  Rng rng(mix64(seed, 0x5151 + static_cast<std::uint64_t>(cat.type)));
  const json& pools = pools_for(cat);
  try {
    switch (cat.type) {
      case TaskType::kDashboard: return gen_dashboard(pools, rng, seed);
      case TaskType::kForm: return gen_form(pools, rng, seed);
      case TaskType::kKnowledge: return gen_knowledge(pools, rng, seed);
      case TaskType::kFilter: return gen_filter(pools, rng, seed);
      case TaskType::kSort: return gen_sort(pools, rng, seed);
      case TaskType::kMenu: return gen_menu(pools, rng, seed);
      case TaskType::kService: return gen_service(pools, rng, seed);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("bad pools for ") + std::string(to_string(cat.type)) + ": " + e.what());
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown task type");
}

TaskConfig resample_config(const TaskConfig& c, const CategorySpec& cat, std::uint64_t seed) {
  Rng rng(mix64(seed, config_hash(c)));
  const json& pools = pools_for(cat);
  TaskConfig out;
  try {
    switch (c.type) {
      case TaskType::kDashboard: out = resample_dashboard(c, pools, rng); break;
      case TaskType::kForm: out = resample_form(c, pools, rng); break;
      case TaskType::kKnowledge: out = resample_knowledge(c, pools, rng); break;
      case TaskType::kFilter: out = resample_filter(c, pools, rng); break;
      case TaskType::kSort: out = resample_sort(c, pools, rng); break;
      case TaskType::kMenu: out = resample_menu(c, pools, rng); break;
      case TaskType::kService: out = resample_service(c, pools, rng); break;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("cannot resample config: ") + e.what());
  }
  // A fresh seed moves the bid layout as well.
  out.seed = mix64(c.seed, seed) % 1000000007ULL;
  return out;
}

namespace {

std::vector<std::uint64_t> seeds_from(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  return j.at(key).get<std::vector<std::uint64_t>>();
}

}  // namespace

TaskSuite suite_from_json(const json& j) {
  TaskSuite s;
  try {
    int version = j.value("schema_version", 0);
    if (version != kSuiteSchemaVersion) {
      throw Error(ErrorCode::kInvalidConfig, "unsupported suite schema_version " + std::to_string(version));
    }
    s.name = j.value("name", "suite");
    std::vector<ActionSpec> specs;
    for (const auto& a : j.at("action_space")) {
      ActionSpec spec;
      spec.name = a.at("name").get<std::string>();
      for (const auto& k : a.at("args")) spec.args.push_back(arg_kind_from_string(k.get<std::string>()));
      spec.doc = a.value("doc", "");
      specs.push_back(std::move(spec));
    }
    s.action_space = ActionSpace(std::move(specs));
    std::set<TaskType> seen;
    for (const auto& c : j.at("categories")) {
      CategorySpec cat;
      cat.type = task_type_from_string(c.at("type").get<std::string>());
      if (!seen.insert(cat.type).second) {
        throw Error(ErrorCode::kInvalidConfig, "duplicate category '" + std::string(to_string(cat.type)) + "'");
      }
      cat.weight = c.value("weight", 1.0);
      if (cat.weight < 0) throw Error(ErrorCode::kInvalidConfig, "negative category weight");
      cat.train_seeds = seeds_from(c, "train_seeds");
      cat.test_seeds = seeds_from(c, "test_seeds");
      cat.pools = c.value("pools", json::object());
      std::set<std::uint64_t> train(cat.train_seeds.begin(), cat.train_seeds.end());
      for (auto seed : cat.test_seeds) {
        if (train.count(seed)) {
          throw Error(ErrorCode::kLeakage, "seed " + std::to_string(seed) + " is in both train and test splits of '" +
                                               std::string(to_string(cat.type)) + "'");
        }
      }
      s.categories.push_back(std::move(cat));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("malformed suite: ") + e.what());
  }
  if (s.categories.empty()) throw Error(ErrorCode::kInvalidConfig, "suite has no categories");
  return s;
}

json suite_to_json(const TaskSuite& s) {
  json j;
  j["schema_version"] = kSuiteSchemaVersion;
  j["name"] = s.name;
  j["action_space"] = json::array();
  for (const auto& spec : s.action_space.specs()) {
    json args = json::array();
    for (auto k : spec.args) args.push_back(to_string(k));
    j["action_space"].push_back({{"name", spec.name}, {"args", args}, {"doc", spec.doc}});
  }
  j["categories"] = json::array();
  for (const auto& c : s.categories) {
    j["categories"].push_back({{"type", to_string(c.type)},
                               {"weight", c.weight},
                               {"train_seeds", c.train_seeds},
                               {"test_seeds", c.test_seeds},
                               {"pools", pools_for(c)}});
  }
  return j;
}

TaskSuite load_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open suite file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, "suite file is not valid JSON: " + std::string(e.what()));
  }
  return suite_from_json(j);
}

TaskSuite default_suite() {
  // Category weights follow the per-category task counts of the benchmark the
  // suite is modelled on (lists split evenly between sort and filter).
  const std::pair<TaskType, double> weights[] = {
      {TaskType::kDashboard, 4}, {TaskType::kForm, 5}, {TaskType::kKnowledge, 1}, {TaskType::kFilter, 6},
      {TaskType::kSort, 6},      {TaskType::kMenu, 2}, {TaskType::kService, 9}};
  TaskSuite s;
  s.name = "mini-workplace";
  s.action_space = ActionSpace::standard();
  for (auto [type, w] : weights) {
    CategorySpec c;
    c.type = type;
    c.weight = w;
    for (std::uint64_t i = 1; i <= 10; ++i) c.train_seeds.push_back(i);
    for (std::uint64_t i = 101; i <= 105; ++i) c.test_seeds.push_back(i);
    s.categories.push_back(std::move(c));
  }
  return s;
}

std::vector<std::string> suite_lexicon(const TaskSuite& s) {
  std::set<std::string> words;
  std::function<void(const json&)> walk = [&](const json& j) {
    if (j.is_string()) {
      for (auto& w : split_words(j.get<std::string>())) words.insert(w);
    } else if (j.is_object()) {
      for (auto it = j.begin(); it != j.end(); ++it) {
        for (auto& w : split_words(it.key())) words.insert(w);
        walk(it.value());
      }
    } else if (j.is_array()) {
      for (const auto& x : j) walk(x);
    }
  };
  for (const auto& c : s.categories) walk(pools_for(c));
  words.erase("{T}");
  return {words.begin(), words.end()};
}

}  // namespace webrl
