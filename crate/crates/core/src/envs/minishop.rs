use std::collections::BTreeSet;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{load_json, EnvError, EnvResult, Environment};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogItem {
    pub id: String,
    pub title: String,
    pub price: f64,
    #[serde(default)]
    pub attributes: Vec<String>,
    #[serde(default)]
    pub options: IndexMap<String, Vec<String>>,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub features: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShopTask {
    pub instruction: String,
    #[serde(default)]
    pub required_attributes: Vec<String>,
    pub max_price: f64,
    #[serde(default)]
    pub required_options: IndexMap<String, String>,
    #[serde(default)]
    pub target_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShopAction {
    Search(String),
    Click(String),
}

/// Parses `search[...]` / `click[...]`, tolerating a space before `[`.
pub fn parse_action(action: &str) -> Option<ShopAction> {
    let a = action.trim();
    let (verb, rest) = a.split_once('[')?;
    let arg = rest.strip_suffix(']')?;
    match verb.trim() {
        "search" => Some(ShopAction::Search(arg.trim().to_string())),
        "click" => Some(ShopAction::Click(arg.trim().to_string())),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Page {
    Search,
    Results,
    Item(usize),
    Section(usize, &'static str),
}

/// Deterministic WebShop-style store over a fixed catalog.
#[derive(Debug, Clone)]
pub struct MiniWebShop {
    catalog: Vec<CatalogItem>,
    tasks: Vec<ShopTask>,
    page_size: usize,
    task: usize,
    page: Page,
    results: Vec<usize>,
    result_page: usize,
    selected: IndexMap<String, String>,
    actions: Vec<String>,
    done: bool,
    reward: f64,
}

fn tokens(text: &str) -> BTreeSet<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Lines of a page; every line carries one trailing space.
fn page(lines: &[String]) -> String {
    lines.iter().map(|l| format!("{l} ")).collect::<Vec<_>>().join("\n")
}

impl MiniWebShop {
    pub fn new(catalog: Vec<CatalogItem>, tasks: Vec<ShopTask>) -> Self {
        Self {
            catalog,
            tasks,
            page_size: 3,
            task: 0,
            page: Page::Search,
            results: Vec::new(),
            result_page: 0,
            selected: IndexMap::new(),
            actions: Vec::new(),
            done: false,
            reward: 0.0,
        }
    }

    pub fn load(catalog: &Path, tasks: &Path) -> Result<Self, EnvError> {
        Ok(Self::new(load_json(catalog)?, load_json(tasks)?))
    }

    pub fn with_page_size(mut self, k: usize) -> Self {
        self.page_size = k.max(1);
        self
    }

    pub fn catalog(&self) -> &[CatalogItem] {
        &self.catalog
    }

    pub fn tasks(&self) -> &[ShopTask] {
        &self.tasks
    }

    fn current_task(&self) -> &ShopTask {
        &self.tasks[self.task]
    }

    /// Catalog indices ranked by shared lowercase tokens with the query,
    /// ties broken by id. Items sharing no token are not listed.
    pub fn rank(&self, query: &str) -> Vec<usize> {
        let q = tokens(query);
        let mut scored: Vec<(usize, usize)> = self
            .catalog
            .iter()
            .enumerate()
            .map(|(i, item)| {
                let mut t = tokens(&item.title);
                for a in &item.attributes {
                    t.extend(tokens(a));
                }
                (i, q.intersection(&t).count())
            })
            .filter(|(_, s)| *s > 0)
            .collect();
        scored.sort_by(|a, b| {
            b.1.cmp(&a.1)
                .then_with(|| self.catalog[a.0].id.cmp(&self.catalog[b.0].id))
        });
        scored.into_iter().map(|(i, _)| i).collect()
    }

    fn page_count(&self) -> usize {
        self.results.len().div_ceil(self.page_size).max(1)
    }

    fn page_items(&self) -> &[usize] {
        let start = (self.result_page * self.page_size).min(self.results.len());
        let end = (start + self.page_size).min(self.results.len());
        &self.results[start..end]
    }

    fn render_search(&self) -> String {
        page(&[
            "WebShop".to_string(),
            "Instruction: ".to_string(),
            self.current_task().instruction.clone(),
            "[Search]".to_string(),
        ])
    }

    pub fn render_results_page(&self) -> String {
        let mut lines = vec!["[Back to Search]".to_string()];
        lines.push(format!(
            "Page {} (Total results: {})",
            self.result_page + 1,
            self.results.len()
        ));
        if self.result_page > 0 {
            lines.push("[< Prev]".to_string());
        }
        if self.result_page + 1 < self.page_count() {
            lines.push("[Next >]".to_string());
        }
        for &i in self.page_items() {
            let item = &self.catalog[i];
            lines.push(format!("[{}]", item.id));
            lines.push(item.title.clone());
            lines.push(format!("${:.2}", item.price));
        }
        page(&lines)
    }

    pub fn render_item_page(&self, index: usize) -> String {
        let item = &self.catalog[index];
        let mut lines = vec!["[Back to Search]".to_string(), "[< Prev]".to_string()];
        for (name, values) in &item.options {
            let vals: String = values.iter().map(|v| format!("[{v}]")).collect();
            lines.push(format!("{name} {vals}"));
        }
        lines.push(item.title.clone());
        lines.push(format!("Price: ${:.2}", item.price));
        lines.push("Rating: N.A.".to_string());
        for s in ["[Description]", "[Features]", "[Reviews]", "[Attributes]"] {
            lines.push(s.to_string());
        }
        let missing: Vec<&str> = item
            .options
            .keys()
            .filter(|k| !self.selected.contains_key(*k))
            .map(String::as_str)
            .collect();
        if missing.is_empty() {
            lines.push("[Buy Now]".to_string());
        } else {
            lines.push(format!(
                "[Buy Now] (You must select buying variation for {} before buying this product)",
                missing.join(", ")
            ));
        }
        if !item.options.is_empty() {
            let sel: Vec<String> = item
                .options
                .keys()
                .map(|k| format!("{k}: {}", self.selected.get(k).map(String::as_str).unwrap_or("None")))
                .collect();
            lines.push(format!("Selected Buying Variation Options: {}", sel.join(", ")));
        }
        page(&lines)
    }

    fn render_section(&self, index: usize, section: &str) -> String {
        let item = &self.catalog[index];
        let body = match section {
            "Description" => item.description.clone(),
            "Features" => item.features.join("\n"),
            "Attributes" => item.attributes.join(", "),
            _ => "No reviews yet.".to_string(),
        };
        let mut lines = vec!["[Back to Search]".to_string(), "[< Prev]".to_string()];
        lines.extend(body.lines().map(str::to_string));
        page(&lines)
    }

    fn render(&self) -> String {
        match &self.page {
            Page::Search => self.render_search(),
            Page::Results => self.render_results_page(),
            Page::Item(i) => self.render_item_page(*i),
            Page::Section(i, s) => self.render_section(*i, s),
        }
    }

    fn banner(&self, text: &str) -> String {
        format!("{text} \n{}", self.render())
    }

    /// Reward for buying `index` with the current option selection.
    pub fn purchase_reward(&self, index: usize) -> f64 {
        let item = &self.catalog[index];
        let task = self.current_task();
        let attrs: BTreeSet<String> = item.attributes.iter().map(|a| a.to_lowercase()).collect();
        let matched_attrs = task
            .required_attributes
            .iter()
            .filter(|a| attrs.contains(&a.to_lowercase()))
            .count();
        let price_ok = usize::from(item.price <= task.max_price);
        let matched_opts = task
            .required_options
            .iter()
            .filter(|(k, v)| self.selected.get(*k).is_some_and(|s| s.eq_ignore_ascii_case(v)))
            .count();
        let num = matched_attrs + price_ok + matched_opts;
        let den = task.required_attributes.len() + 1 + task.required_options.len();
        num as f64 / den as f64
    }

    fn click(&mut self, target: &str) -> String {
        match (target, self.page.clone()) {
            ("Back to Search", _) => {
                self.page = Page::Search;
                self.render()
            }
            ("Next >", Page::Results) => {
                if self.result_page + 1 < self.page_count() {
                    self.result_page += 1;
                    self.render()
                } else {
                    self.banner("Invalid action: no next page")
                }
            }
            ("< Prev" | "< Back", Page::Results) => {
                if self.result_page > 0 {
                    self.result_page -= 1;
                    self.render()
                } else {
                    self.banner("Invalid action: no previous page")
                }
            }
            ("< Prev" | "< Back", Page::Item(_)) => {
                self.page = Page::Results;
                self.render()
            }
            ("< Prev" | "< Back", Page::Section(i, _)) => {
                self.page = Page::Item(i);
                self.render()
            }
            (_, Page::Results) => {
                let hit = self
                    .page_items()
                    .iter()
                    .copied()
                    .find(|&i| self.catalog[i].id == target);
                match hit {
                    Some(i) => {
                        self.page = Page::Item(i);
                        self.selected.clear();
                        self.render()
                    }
                    None => self.banner(&format!("Invalid action: click[{target}]")),
                }
            }
            (_, Page::Item(i)) => {
                if target == "Buy Now" {
                    self.done = true;
                    self.reward = self.purchase_reward(i);
                    return format!("Thank you for shopping with us! \nYour score (min 0.0, max 1.0): {:.2} ", self.reward);
                }
                for s in ["Description", "Features", "Reviews", "Attributes"] {
                    if target == s {
                        self.page = Page::Section(i, s);
                        return self.render();
                    }
                }
                let item = &self.catalog[i];
                let opt = item
                    .options
                    .iter()
                    .find(|(_, vals)| vals.iter().any(|v| v == target))
                    .map(|(k, _)| k.clone());
                match opt {
                    Some(k) => {
                        self.selected.insert(k, target.to_string());
                        self.render()
                    }
                    None => self.banner(&format!("Invalid action: click[{target}]")),
                }
            }
            _ => self.banner(&format!("Invalid action: click[{target}]")),
        }
    }
}

impl Environment for MiniWebShop {
    fn reset(&mut self, task: usize) -> Result<String, EnvError> {
        if task >= self.tasks.len() {
            return Err(EnvError::UnknownTask(task));
        }
        self.task = task;
        self.page = Page::Search;
        self.results.clear();
        self.result_page = 0;
        self.selected.clear();
        self.actions.clear();
        self.done = false;
        self.reward = 0.0;
        Ok(self.render())
    }

    fn step(&mut self, action: &str) -> Result<EnvResult, EnvError> {
        if self.done {
            return Err(EnvError::StepAfterDone);
        }
        self.actions.push(action.to_string());
        let obs = match parse_action(action) {
            Some(ShopAction::Search(q)) => {
                self.results = self.rank(&q);
                self.result_page = 0;
                self.page = Page::Results;
                self.render()
            }
            Some(ShopAction::Click(target)) => self.click(&target),
            None => self.banner(&format!("Invalid action: {action}")),
        };
        Ok(EnvResult {
            obs,
            reward: if self.done { self.reward } else { 0.0 },
            done: self.done,
        })
    }

    fn score(&self) -> f64 {
        self.reward
    }

    fn task_description(&self) -> String {
        format!(
            "Navigate a shopping website to purchase an item matching the following request: {}",
            self.current_task().instruction
        )
    }

    fn actions(&self) -> &[String] {
        &self.actions
    }

    fn num_tasks(&self) -> usize {
        self.tasks.len()
    }
}
