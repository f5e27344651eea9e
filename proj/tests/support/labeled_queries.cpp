#include "labeled_queries.hpp"

namespace schemalink::testing {

const Schema& shop_schema() {
    static const Schema s = parse_schema_document(R"({"db_id": "shop", "tables": [
        {"name": "customers", "columns": [{"name": "id"}, {"name": "name"}, {"name": "city"}]},
        {"name": "orders", "columns": [{"name": "id"}, {"name": "customer_id"}, {"name": "employee_id"}]},
        {"name": "order_items", "columns": [{"name": "order_id"}, {"name": "product_id"}, {"name": "qty"}]},
        {"name": "products", "columns": [{"name": "id"}, {"name": "name"}, {"name": "price"}]},
        {"name": "employees", "columns": [{"name": "id"}, {"name": "manager_id"}, {"name": "department_id"}]},
        {"name": "departments", "columns": [{"name": "id"}, {"name": "name"}]},
        {"name": "Order Details", "columns": [{"name": "OrderID"}, {"name": "Discount"}]},
        {"name": "yearmonth", "columns": [{"name": "CustomerID"}, {"name": "Date"}]}],
      "foreign_keys": [
        {"from_table": "orders", "from_column": "customer_id", "to_table": "customers", "to_column": "id"},
        {"from_table": "orders", "from_column": "employee_id", "to_table": "employees", "to_column": "id"},
        {"from_table": "order_items", "from_column": "order_id", "to_table": "orders", "to_column": "id"},
        {"from_table": "order_items", "from_column": "product_id", "to_table": "products", "to_column": "id"},
        {"from_table": "employees", "from_column": "manager_id", "to_table": "employees", "to_column": "id"},
        {"from_table": "employees", "from_column": "department_id", "to_table": "departments", "to_column": "id"}]})");
    return s;
}

const std::vector<LabeledQuery>& labeled_queries() {
    static const std::vector<LabeledQuery> queries = {
        {"single_table", "SELECT name FROM customers WHERE city = 'Oslo'", {"customers"}},
        {"implicit_join", "SELECT c.name FROM customers c, orders o WHERE o.customer_id = c.id", {"customers", "orders"}},
        {"inner_join_as", "SELECT T1.name FROM customers AS T1 INNER JOIN orders AS T2 ON T1.id = T2.customer_id",
         {"customers", "orders"}},
        {"three_way_join",
         "SELECT p.name FROM orders o JOIN order_items i ON i.order_id = o.id JOIN products p ON p.id = i.product_id",
         {"order_items", "orders", "products"}},
        {"left_outer_join", "SELECT c.name, COUNT(o.id) FROM customers c LEFT OUTER JOIN orders o ON o.customer_id = c.id "
                            "GROUP BY c.name", {"customers", "orders"}},
        {"self_join", "SELECT e.id, m.id FROM employees e JOIN employees m ON e.manager_id = m.id", {"employees"}},
        {"using_clause", "SELECT * FROM orders JOIN order_items USING (id)", {"order_items", "orders"}},
        {"natural_join", "SELECT * FROM orders NATURAL JOIN order_items", {"order_items", "orders"}},
        {"cross_join", "SELECT * FROM products CROSS JOIN departments", {"departments", "products"}},
        {"in_subquery", "SELECT name FROM customers WHERE id IN (SELECT customer_id FROM orders WHERE employee_id = 3)",
         {"customers", "orders"}},
        {"exists_subquery", "SELECT name FROM products p WHERE EXISTS (SELECT 1 FROM order_items i WHERE i.product_id = p.id)",
         {"order_items", "products"}},
        {"scalar_subquery_in_select",
         "SELECT name, (SELECT COUNT(*) FROM orders o WHERE o.customer_id = c.id) AS n FROM customers c",
         {"customers", "orders"}},
        {"derived_table", "SELECT t.cnt FROM (SELECT customer_id, COUNT(*) AS cnt FROM orders GROUP BY customer_id) AS t",
         {"orders"}},
        {"nested_three_levels",
         "SELECT name FROM departments WHERE id IN (SELECT department_id FROM employees WHERE id IN "
         "(SELECT employee_id FROM orders WHERE customer_id IN (SELECT id FROM customers WHERE city = 'Rome')))",
         {"customers", "departments", "employees", "orders"}},
        {"cte_simple", "WITH big AS (SELECT order_id FROM order_items WHERE qty > 10) SELECT * FROM big JOIN orders "
                       "ON orders.id = big.order_id", {"order_items", "orders"}},
        {"cte_two_chained",
         "WITH a AS (SELECT id FROM customers), b AS (SELECT * FROM a JOIN orders ON orders.customer_id = a.id) "
         "SELECT COUNT(*) FROM b", {"customers", "orders"}},
        {"cte_recursive",
         "WITH RECURSIVE chain(id, manager_id) AS (SELECT id, manager_id FROM employees WHERE id = 1 UNION ALL "
         "SELECT e.id, e.manager_id FROM employees e JOIN chain c ON e.manager_id = c.id) SELECT * FROM chain",
         {"employees"}},
        {"cte_shadowing_table",
         "WITH orders AS (SELECT * FROM orders WHERE employee_id = 2) SELECT * FROM orders", {"orders"}},
        {"double_quoted_identifier", "SELECT \"Discount\" FROM \"Order Details\" WHERE \"OrderID\" = 7", {"Order Details"}},
        {"backtick_identifier", "SELECT T1.Discount FROM `Order Details` AS T1 JOIN `orders` AS T2 ON T1.OrderID = T2.id",
         {"Order Details", "orders"}},
        {"bracket_identifier", "SELECT * FROM [Order Details] d INNER JOIN [customers] c ON c.id = d.OrderID",
         {"Order Details", "customers"}},
        {"schema_qualified", "SELECT * FROM main.products JOIN main.order_items ON products.id = order_items.product_id",
         {"order_items", "products"}},
        {"union_compound", "SELECT name FROM customers UNION SELECT name FROM products EXCEPT SELECT name FROM departments",
         {"customers", "departments", "products"}},
        {"string_literal_looks_like_sql", "SELECT name FROM customers WHERE city = 'FROM orders JOIN products'",
         {"customers"}},
        {"comments", "SELECT name -- FROM orders\nFROM customers /* JOIN products */", {"customers"}},
        {"case_insensitive_keywords", "select T1.Date from YearMonth as t1 inner join Customers as t2 on t1.CustomerID = t2.id",
         {"customers", "yearmonth"}},
        {"keyword_named_alias", "SELECT o.id FROM orders AS o JOIN order_items AS \"from\" ON \"from\".order_id = o.id",
         {"order_items", "orders"}},
        {"parenthesized_join", "SELECT * FROM (orders JOIN customers ON orders.customer_id = customers.id) "
                               "JOIN employees ON employees.id = orders.employee_id",
         {"customers", "employees", "orders"}},
        {"is_distinct_from", "SELECT id FROM employees WHERE manager_id IS NOT DISTINCT FROM department_id",
         {"employees"}},
        {"cast_and_functions", "SELECT CAST(SUM(i.qty) AS REAL) / COUNT(DISTINCT o.id) FROM orders o "
                               "JOIN order_items i ON i.order_id = o.id WHERE STRFTIME('%Y', 'now') = '2024'",
         {"order_items", "orders"}},
    };
    return queries;
}

} // namespace schemalink::testing
