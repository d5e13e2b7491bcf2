//! Synthetic corpus generator with planted effects.
//!
//! Generation runs in two phases. The first lays out careers: dates, authors,
//! institutions and classification codes. Areas come in clusters that share
//! a ring of concepts; a code names an area and a concept. Every paper draws
//! its codes from a short stretch of the concept ring, and background papers
//! by one-off authors mix areas of one cluster, so the same concept in two
//! areas of a cluster is close while different clusters are far apart. A
//! focal author drifts along the concept ring inside one area and, on a
//! low-discrepancy schedule set by the exploration rate, jumps to an area not
//! seen in the recent look-back: within the cluster at the same concept, or
//! to another cluster.
//!
//! The second phase measures every focal author with the library's own metric
//! code at the configured split point and then realises citations so that
//! future impact follows the planted outcome model. Citations are carried by
//! background "citer" papers that have no codes, so they leave the topic
//! graph untouched.

use std::collections::{BTreeMap, HashMap, VecDeque};

use chrono::{Datelike, Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{CodeScheme, Corpus, EligibilityFilter, Paper, DAYS_PER_YEAR};
use crate::error::{Error, Result};
use crate::metrics::{assign_groups, ed, ep, split_author, AnalysisConfig, Group};
use crate::stats::replicate_rng;
use crate::topicgraph::{DistanceMetric, DistanceProvider, GraphKind, TopicGraph};

/// How future impact is planted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum OutcomeModel {
    /// `y = b0 + ep·EP_past + ed·ED_past + past·logcit_past + u`.
    Linear { ep: f64, ed: f64 },
    /// `y = b0 + effect·[group A] + past·logcit_past + u`. With
    /// `future_group`, the indicator uses the post-split group instead.
    Group { effect: f64, future_group: bool },
    /// Future papers follow the same quality process as past papers.
    Null,
}

/// A planted mediator carried as an external per-paper covariate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediatorSpec {
    pub name: String,
    /// Slope of the mediator on past EP.
    pub a: f64,
    /// Slope of the outcome on the mediator.
    pub b: f64,
    pub noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub authors: usize,
    pub first_year: i32,
    /// Focal authors start in `first_year .. first_year + cohort_years`.
    pub cohort_years: u32,
    pub career_years: (u32, u32),
    pub papers_per_year: (u32, u32),
    pub areas: usize,
    /// Areas per cluster; must divide `areas`.
    pub cluster_size: usize,
    /// Concepts per area are `subareas * topics_per_subarea`.
    pub subareas: usize,
    pub topics_per_subarea: usize,
    pub codes_per_paper: (usize, usize),
    /// Codes are drawn within this many concept steps of the paper's centre.
    pub code_spread: usize,
    /// Cluster-mixing background papers per focal author.
    pub background_per_author: usize,
    /// Areas mixed on a background paper.
    pub background_areas: usize,
    pub max_coauthors: usize,
    /// Look-back (in papers) the exploration schedule avoids.
    pub explore_window: usize,
    pub explore_range: (f64, f64),
    /// Range of the per-author probability that a jump leaves the cluster.
    pub far_jump_range: (f64, f64),
    /// Range of the per-author SD (in concept steps) of within-area drift.
    pub drift_range: (f64, f64),
    /// Exponential decay of the exploration rate per career year.
    pub explore_decay: f64,
    /// Added to the drift SD per year of cohort start.
    pub drift_shift_per_year: f64,
    /// Share of authors who swap strategy at `flip_year` career years.
    pub flip_fraction: f64,
    pub flip_year: u32,
    pub institutions: usize,
    pub ivy_institutions: usize,
    pub move_probability: f64,
    pub quality_mean: f64,
    pub quality_sd: f64,
    /// Correlation channel between exploration rate and quality.
    pub quality_explore_link: f64,
    pub intercept: f64,
    /// Weight of measured past impact in the future outcome.
    pub past_weight: f64,
    pub author_noise_sd: f64,
    pub paper_noise_sd: f64,
    pub outcome: OutcomeModel,
    pub mediator: Option<MediatorSpec>,
    /// Measurement settings the outcome is planted against.
    pub analysis: AnalysisConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            authors: 1000,
            first_year: 1985,
            cohort_years: 15,
            career_years: (10, 20),
            papers_per_year: (3, 4),
            areas: 18,
            cluster_size: 6,
            subareas: 4,
            topics_per_subarea: 5,
            codes_per_paper: (2, 3),
            code_spread: 2,
            background_per_author: 10,
            background_areas: 3,
            max_coauthors: 3,
            explore_window: 5,
            explore_range: (0.05, 0.6),
            far_jump_range: (0.0, 1.0),
            drift_range: (0.2, 2.5),
            explore_decay: 0.0,
            drift_shift_per_year: 0.0,
            flip_fraction: 0.0,
            flip_year: 10,
            institutions: 40,
            ivy_institutions: 4,
            move_probability: 0.03,
            quality_mean: 1.2,
            quality_sd: 0.3,
            quality_explore_link: 0.0,
            intercept: 1.0,
            past_weight: 0.4,
            author_noise_sd: 0.1,
            paper_noise_sd: 0.3,
            outcome: OutcomeModel::Linear { ep: 0.30, ed: -0.25 },
            mediator: None,
            analysis: AnalysisConfig::default(),
        }
    }
}

fn ordered_unit(r: (f64, f64)) -> bool {
    (0.0..=1.0).contains(&r.0) && (r.0..=1.0).contains(&r.1)
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.authors == 0 {
            return bad("authors must be positive");
        }
        if self.career_years.0 == 0 || self.career_years.0 > self.career_years.1 {
            return bad("career_years must be a nonempty positive range");
        }
        if self.papers_per_year.0 == 0 || self.papers_per_year.0 > self.papers_per_year.1 || self.papers_per_year.1 > 12 {
            return bad("papers_per_year must be a range within 1..=12");
        }
        if self.areas < 3 || self.areas > 89 || self.subareas == 0 || self.subareas > 89 {
            return bad("areas must lie in 3..=89 and subareas in 1..=89");
        }
        if self.cluster_size < 2 || self.areas % self.cluster_size != 0 {
            return bad("cluster_size must be at least 2 and divide areas");
        }
        if self.background_areas == 0 || self.background_areas > self.cluster_size {
            return bad("background_areas must lie in 1..=cluster_size");
        }
        if self.topics_per_subarea == 0 || self.topics_per_subarea > 89 {
            return bad("topics_per_subarea must lie in 1..=89");
        }
        if self.codes_per_paper.0 == 0 || self.codes_per_paper.0 > self.codes_per_paper.1 {
            return bad("codes_per_paper must be a nonempty positive range");
        }
        if self.codes_per_paper.1 > 2 * self.code_spread + 1 || 2 * self.code_spread + 1 > self.concepts() {
            return bad("codes_per_paper must fit within the code spread, and the spread within the concept ring");
        }
        if self.explore_window == 0 || self.explore_window + 1 >= self.areas {
            return bad("explore_window must be positive and smaller than areas - 1");
        }
        if !ordered_unit(self.explore_range) || !ordered_unit(self.far_jump_range) {
            return bad("explore_range and far_jump_range must be ordered ranges within [0, 1]");
        }
        if !(self.drift_range.0 >= 0.0 && self.drift_range.0 <= self.drift_range.1) {
            return bad("drift_range must be an ordered non-negative range");
        }
        if !(0.0..=1.0).contains(&self.flip_fraction) {
            return bad("flip_fraction must lie in [0, 1]");
        }
        if self.institutions == 0 || self.ivy_institutions > self.institutions {
            return bad("institutions must be positive and at least ivy_institutions");
        }
        Ok(())
    }

    pub fn concepts(&self) -> usize {
        self.subareas * self.topics_per_subarea
    }

    pub fn cluster_of(&self, area: usize) -> usize {
        area / self.cluster_size
    }

    /// Ivy-flagged institution ids.
    pub fn ivy_names(&self) -> Vec<String> {
        (0..self.ivy_institutions).map(institution_name).collect()
    }

    /// Classification code of `concept` in `area`.
    pub fn code_of(&self, area: usize, concept: usize) -> String {
        format!(
            "{:02}.{:02}.{:02}",
            10 + area,
            10 + concept / self.topics_per_subarea,
            10 + concept % self.topics_per_subarea
        )
    }
}

fn institution_name(i: usize) -> String {
    format!("inst{i:03}")
}

/// Latent traits of a focal author.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatentAuthor {
    pub author_id: String,
    pub explore_rate: f64,
    pub far_jump: f64,
    pub drift: f64,
    pub quality: f64,
    pub flipped: bool,
}

/// Phase-one output: papers without citations plus latent traits.
#[derive(Debug, Clone)]
pub struct Careers {
    pub papers: Vec<Paper>,
    pub authors: Vec<LatentAuthor>,
}

fn uniform_u32<R: Rng>(rng: &mut R, range: (u32, u32)) -> u32 {
    rng.random_range(range.0..=range.1)
}

fn uniform_in<R: Rng>(rng: &mut R, range: (f64, f64)) -> f64 {
    range.0 + (range.1 - range.0) * rng.random::<f64>()
}

/// Lays out focal careers and background papers.
pub fn generate_careers(config: &SynthConfig) -> Result<Careers> {
    config.validate()?;
    let mut papers = Vec::new();
    let mut authors = Vec::new();
    for k in 0..config.authors {
        let (p, a) = one_career(config, k);
        papers.extend(p);
        authors.push(a);
        papers.extend(background(config, k));
    }
    Ok(Careers { papers, authors })
}

/// Distinct codes within `spread` concept steps of `centre`, each in an area
/// drawn from `areas`.
fn draw_codes<R: Rng>(rng: &mut R, config: &SynthConfig, centre: usize, areas: &[usize]) -> Vec<String> {
    let ring = config.concepts() as i64;
    let spread = config.code_spread as i64;
    let want = rng.random_range(config.codes_per_paper.0..=config.codes_per_paper.1);
    let mut picked: Vec<(usize, usize)> = Vec::with_capacity(want);
    while picked.len() < want {
        let c = (centre as i64 + rng.random_range(-spread..=spread)).rem_euclid(ring) as usize;
        let a = areas[rng.random_range(0..areas.len())];
        if !picked.contains(&(a, c)) {
            picked.push((a, c));
        }
    }
    picked.into_iter().map(|(a, c)| config.code_of(a, c)).collect()
}

fn background(config: &SynthConfig, k: usize) -> Vec<Paper> {
    let mut rng = replicate_rng(config.seed ^ 0xb0b0_b0b0, k as u64);
    let span = (config.cohort_years + config.career_years.1) as i64 * 365;
    let start = NaiveDate::from_ymd_opt(config.first_year, 1, 1).expect("valid year");
    let clusters = config.areas / config.cluster_size;
    (0..config.background_per_author)
        .map(|i| {
            let id = format!("b{k:05}-{i:02}");
            let cluster = rng.random_range(0..clusters);
            let mut members: Vec<usize> = (0..config.cluster_size).map(|j| cluster * config.cluster_size + j).collect();
            let (chosen, _) = members.partial_shuffle(&mut rng, config.background_areas);
            let chosen = chosen.to_vec();
            let centre = rng.random_range(0..config.concepts());
            Paper {
                paper_id: id.clone(),
                date: start + Duration::days(rng.random_range(0..span)),
                authors: vec![format!("{id}-author")],
                codes: draw_codes(&mut rng, config, centre, &chosen),
                refs: Vec::new(),
                institutions: None,
                covariates: BTreeMap::new(),
            }
        })
        .collect()
}

fn one_career(config: &SynthConfig, k: usize) -> (Vec<Paper>, LatentAuthor) {
    let mut rng = replicate_rng(config.seed, k as u64);
    let id = format!("a{k:05}");
    let start_year = config.first_year + rng.random_range(0..config.cohort_years.max(1)) as i32;
    let start = NaiveDate::from_ymd_opt(start_year, 1, 1).expect("valid year") + Duration::days(rng.random_range(0..300));
    let years = uniform_u32(&mut rng, config.career_years);
    let per_year = uniform_u32(&mut rng, config.papers_per_year);
    let n = (years * per_year) as usize;
    let spacing = 365.25 / per_year as f64;
    let concepts = config.concepts();

    let (lo, hi) = config.explore_range;
    let rate = uniform_in(&mut rng, config.explore_range);
    let far = uniform_in(&mut rng, config.far_jump_range);
    let shift = config.drift_shift_per_year * (start_year - config.first_year) as f64;
    let drift = (uniform_in(&mut rng, config.drift_range) + shift).max(0.0);
    let quality = config.quality_mean
        + config.quality_explore_link * (rate - (lo + hi) / 2.0)
        + Normal::new(0.0, config.quality_sd.max(0.0)).expect("finite sd").sample(&mut rng);
    let flipped = rng.random::<f64>() < config.flip_fraction;
    let phase: f64 = rng.random();

    let mut inst = rng.random_range(0..config.institutions);
    let mut area = rng.random_range(0..config.areas);
    let mut concept = rng.random_range(0..concepts) as f64;
    let mut window: VecDeque<usize> = VecDeque::new();
    let mut schedule = 0.0;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let date = start + Duration::days((i as f64 * spacing) as i64 + rng.random_range(0..(spacing / 3.0) as i64));
        let career_year = (i as f64 / per_year as f64).floor();
        let (r, f, d) = if flipped && career_year >= config.flip_year as f64 {
            (
                lo + hi - rate,
                config.far_jump_range.0 + config.far_jump_range.1 - far,
                (config.drift_range.0 + config.drift_range.1 - drift).max(0.0),
            )
        } else {
            (rate, far, drift)
        };
        let mut explore = false;
        if i > 0 {
            let r = r * (-config.explore_decay * career_year).exp();
            let next = schedule + r;
            explore = (next + phase).floor() > (schedule + phase).floor();
            schedule = next;
        }
        if explore {
            let free: Vec<usize> = (0..config.areas).filter(|a| !window.contains(a)).collect();
            let (near, away): (Vec<usize>, Vec<usize>) =
                free.into_iter().partition(|&a| config.cluster_of(a) == config.cluster_of(area));
            if (rng.random::<f64>() < f || near.is_empty()) && !away.is_empty() {
                area = away[rng.random_range(0..away.len())];
                concept = rng.random_range(0..concepts) as f64;
            } else if !near.is_empty() {
                area = near[rng.random_range(0..near.len())];
            }
        } else if i > 0 && d > 0.0 {
            let step = Normal::new(0.0, d).expect("finite sd").sample(&mut rng);
            concept = (concept + step).rem_euclid(concepts as f64);
        }
        window.push_back(area);
        if window.len() > config.explore_window {
            window.pop_front();
        }
        let centre = (concept.round() as usize) % concepts;
        let codes = draw_codes(&mut rng, config, centre, &[area]);

        if rng.random::<f64>() < config.move_probability {
            inst = rng.random_range(0..config.institutions);
        }
        let co = rng.random_range(0..=config.max_coauthors);
        let mut names: Vec<String> = (0..co).map(|s| format!("{id}-c{}-{s}", i / 3)).collect();
        let mut insts: Vec<Vec<String>> = (0..co)
            .map(|_| {
                let j = if rng.random_bool(0.5) { inst } else { rng.random_range(0..config.institutions) };
                vec![institution_name(j)]
            })
            .collect();
        let pos = if co == 0 {
            0
        } else {
            let u: f64 = rng.random();
            if u < 0.5 {
                0
            } else if u < 0.8 {
                co
            } else {
                rng.random_range(1..=co)
            }
        };
        names.insert(pos, id.clone());
        insts.insert(pos, vec![institution_name(inst)]);
        out.push(Paper {
            paper_id: format!("{id}-p{i:03}"),
            date,
            authors: names,
            codes,
            refs: Vec::new(),
            institutions: Some(insts),
            covariates: BTreeMap::new(),
        });
    }
    (
        out,
        LatentAuthor {
            author_id: id,
            explore_rate: rate,
            far_jump: far,
            drift,
            quality,
            flipped,
        },
    )
}

/// Per-author planted quantities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuthorTruth {
    pub author_id: String,
    pub explore_rate: f64,
    pub far_jump: f64,
    pub drift: f64,
    pub quality: f64,
    pub flipped: bool,
    /// Whether the author is part of the analysis at the planted split.
    pub analysed: bool,
    pub ep_past: Option<f64>,
    pub ed_past: Option<f64>,
    pub ep_future: Option<f64>,
    pub ed_future: Option<f64>,
    pub logcit_past: Option<f64>,
    pub group: Option<Group>,
    pub group_future: Option<Group>,
    pub mediator: Option<f64>,
    /// Planted future-impact target with and without the treatment effect.
    pub outcome_untreated: Option<f64>,
    pub outcome_treated: Option<f64>,
    pub outcome: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSummary {
    pub focal_authors: usize,
    pub analysed_authors: usize,
    pub focal_papers: usize,
    pub citer_papers: usize,
    pub citations: usize,
}

/// Planted corpus with its ground truth.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub corpus: Corpus,
    pub truth: Vec<AuthorTruth>,
    pub summary: SynthSummary,
}

impl Synthetic {
    pub fn truth_of(&self, author_id: &str) -> Option<&AuthorTruth> {
        self.truth
            .binary_search_by(|t| t.author_id.as_str().cmp(author_id))
            .ok()
            .map(|i| &self.truth[i])
    }

    /// Mean treated-minus-untreated target over authors in `group`.
    pub fn true_effect_in(&self, group: Group) -> Option<f64> {
        let d: Vec<f64> = self
            .truth
            .iter()
            .filter(|t| t.group == Some(group))
            .filter_map(|t| Some(t.outcome_treated? - t.outcome_untreated?))
            .collect();
        (!d.is_empty()).then(|| d.iter().sum::<f64>() / d.len() as f64)
    }
}

/// Log-scale value realised as an integer count, unbiased in `ln(1 + c)`.
fn realise_count<R: Rng>(rng: &mut R, target: f64) -> u32 {
    if target <= 0.0 {
        return 0;
    }
    let x = target.exp() - 1.0;
    let lo = x.floor();
    let (l0, l1) = ((1.0 + lo).ln(), (2.0 + lo).ln());
    let up = (target - l0) / (l1 - l0);
    lo as u32 + u32::from(rng.random::<f64>() < up)
}

const CITER_STEP_DAYS: i64 = 7;

/// Phase two: measures careers and plants citations.
pub fn plant(careers: Careers, config: &SynthConfig) -> Result<Synthetic> {
    Planter::new(careers)?.plant(config)
}

/// Phase-one corpus and topic graph, reusable across planting configurations.
#[derive(Debug, Clone)]
pub struct Planter {
    base: Corpus,
    graph: TopicGraph,
    authors: Vec<LatentAuthor>,
}

impl Planter {
    pub fn new(careers: Careers) -> Result<Self> {
        let base = Corpus::from_papers(careers.papers, &CodeScheme::default(), &EligibilityFilter::default())?;
        let graph = TopicGraph::build(GraphKind::Cooccurrence, &base, base.codes(), None);
        Ok(Self {
            base,
            graph,
            authors: careers.authors,
        })
    }

    /// Citation-free corpus.
    pub fn base(&self) -> &Corpus {
        &self.base
    }

    pub fn graph(&self) -> &TopicGraph {
        &self.graph
    }

    pub fn plant(&self, config: &SynthConfig) -> Result<Synthetic> {
        plant_with(self, config)
    }
}

fn plant_with(planter: &Planter, config: &SynthConfig) -> Result<Synthetic> {
    config.validate()?;
    let scheme = CodeScheme::default();
    let filter = EligibilityFilter::default();
    let base = &planter.base;
    let careers = planter;
    let view = base.codes();
    let provider = DistanceProvider::new(&planter.graph, DistanceMetric::WeightedOverlap);
    let analysis = &config.analysis;

    struct Measured {
        past: Vec<u32>,
        future: Vec<u32>,
        ep_past: f64,
        ed_past: f64,
        ep_future: Option<f64>,
        ed_future: Option<f64>,
    }
    let latent: HashMap<&str, &LatentAuthor> = careers.authors.iter().map(|a| (a.author_id.as_str(), a)).collect();
    let mut measured: BTreeMap<String, Measured> = BTreeMap::new();
    for c in base.careers() {
        if !latent.contains_key(c.author_id.as_str()) {
            continue;
        }
        let Ok((past, future)) = split_author(base, c, analysis.split, analysis.eligibility) else {
            continue;
        };
        let e = ep(base, view, past, analysis.window);
        let d = ed(base, view, past, analysis.window, &provider, analysis.distance_mode);
        if let (Some(e), Some(d)) = (e, d) {
            measured.insert(
                c.author_id.clone(),
                Measured {
                    past: past.to_vec(),
                    future: future.to_vec(),
                    ep_past: e,
                    ed_past: d,
                    ep_future: ep(base, view, future, analysis.window),
                    ed_future: ed(base, view, future, analysis.window, &provider, analysis.distance_mode),
                },
            );
        }
    }

    let ids: Vec<&String> = measured.keys().collect();
    let ep_v: Vec<f64> = measured.values().map(|m| m.ep_past).collect();
    let ed_v: Vec<f64> = measured.values().map(|m| m.ed_past).collect();
    let groups = assign_groups(&ep_v, &ed_v, analysis.group_quantile).groups;
    let fut_idx: Vec<usize> = (0..ids.len())
        .filter(|&i| {
            let m = &measured[ids[i]];
            m.ep_future.is_some() && m.ed_future.is_some()
        })
        .collect();
    let fut_groups = assign_groups(
        &fut_idx.iter().map(|&i| measured[ids[i]].ep_future.expect("filtered")).collect::<Vec<_>>(),
        &fut_idx.iter().map(|&i| measured[ids[i]].ed_future.expect("filtered")).collect::<Vec<_>>(),
        analysis.group_quantile,
    )
    .groups;
    let mut group_of: HashMap<&str, (Group, Option<Group>)> = HashMap::new();
    for (i, id) in ids.iter().enumerate() {
        group_of.insert(id.as_str(), (groups[i], None));
    }
    for (k, &i) in fut_idx.iter().enumerate() {
        group_of.get_mut(ids[i].as_str()).expect("present").1 = Some(fut_groups[k]);
    }

    let mut papers: Vec<Paper> = base.papers().to_vec();
    let mut log_targets: Vec<f64> = vec![0.0; papers.len()];
    let paper_noise = Normal::new(0.0, config.paper_noise_sd.max(0.0)).expect("finite sd");
    let author_noise = Normal::new(0.0, config.author_noise_sd.max(0.0)).expect("finite sd");
    let mut counts: Vec<u32> = vec![0; papers.len()];
    let mut truth = Vec::new();

    for (k, a) in careers.authors.iter().enumerate() {
        let mut rng = replicate_rng(config.seed ^ 0x5eed_0f_c17e, k as u64);
        let all = base.author_papers(&a.author_id).to_vec();
        let mut t = AuthorTruth {
            author_id: a.author_id.clone(),
            explore_rate: a.explore_rate,
            far_jump: a.far_jump,
            drift: a.drift,
            quality: a.quality,
            flipped: a.flipped,
            analysed: false,
            ep_past: None,
            ed_past: None,
            ep_future: None,
            ed_future: None,
            logcit_past: None,
            group: None,
            group_future: None,
            mediator: None,
            outcome_untreated: None,
            outcome_treated: None,
            outcome: None,
        };
        let mediator = config.mediator.as_ref().map(|m| {
            let x = measured.get(&a.author_id).map_or(a.explore_rate, |mm| mm.ep_past);
            m.a * x + Normal::new(0.0, m.noise_sd.max(0.0)).expect("finite sd").sample(&mut rng)
        });
        if let (Some(spec), Some(v)) = (&config.mediator, mediator) {
            for &p in &all {
                papers[p as usize].covariates.insert(spec.name.clone(), v);
            }
        }
        t.mediator = mediator;

        let Some(m) = measured.get(&a.author_id) else {
            for &p in &all {
                let target = a.quality + paper_noise.sample(&mut rng);
                let c = realise_count(&mut rng, target);
                counts[p as usize] = c;
                log_targets[p as usize] = a.quality;
            }
            truth.push(t);
            continue;
        };
        let mut past_log = 0.0;
        for &p in &m.past {
            let target = a.quality + paper_noise.sample(&mut rng);
                let c = realise_count(&mut rng, target);
            counts[p as usize] = c;
            past_log += (1.0 + c as f64).ln();
        }
        let logcit_past = past_log / m.past.len() as f64;
        let (group, group_future) = group_of[a.author_id.as_str()];
        let common = config.intercept + config.past_weight * logcit_past + author_noise.sample(&mut rng);
        let (untreated, treated, outcome) = match config.outcome {
            OutcomeModel::Linear { ep, ed } => {
                let mut y = common + ep * m.ep_past + ed * m.ed_past;
                if let (Some(spec), Some(v)) = (&config.mediator, mediator) {
                    y += spec.b * v;
                }
                (None, None, y)
            }
            OutcomeModel::Group { effect, future_group } => {
                let g = if future_group { group_future.unwrap_or(Group::Excluded) } else { group };
                let y0 = common;
                let y1 = common + effect;
                (Some(y0), Some(y1), if g == Group::A { y1 } else { y0 })
            }
            OutcomeModel::Null => (None, None, a.quality),
        };
        let noise: Vec<f64> = m.future.iter().map(|_| paper_noise.sample(&mut rng)).collect();
        let mean_noise = noise.iter().sum::<f64>() / noise.len() as f64;
        for (&p, e) in m.future.iter().zip(&noise) {
            let target = outcome + e - mean_noise;
            counts[p as usize] = realise_count(&mut rng, target);
            log_targets[p as usize] = target;
        }
        t.analysed = true;
        t.ep_past = Some(m.ep_past);
        t.ed_past = Some(m.ed_past);
        t.ep_future = m.ep_future;
        t.ed_future = m.ed_future;
        t.logcit_past = Some(logcit_past);
        t.group = Some(group);
        t.group_future = group_future;
        t.outcome_untreated = untreated;
        t.outcome_treated = treated;
        t.outcome = Some(outcome);
        truth.push(t);
    }

    let first = papers.iter().map(|p| p.date).min().expect("nonempty corpus");
    let origin = NaiveDate::from_ymd_opt(first.year(), 1, 1).expect("valid date");
    let bucket_date = |b: i64| origin + Duration::days(b * CITER_STEP_DAYS);
    let mut citers: BTreeMap<(u32, i64), Vec<String>> = BTreeMap::new();
    let mut rng = replicate_rng(config.seed ^ 0xc17e_c17e, u64::MAX);
    let mut citations = 0usize;
    for (i, p) in papers.iter().enumerate() {
        let c = counts[i] as i64;
        if c == 0 {
            continue;
        }
        citations += c as usize;
        let b0 = (p.date - origin).num_days().div_euclid(CITER_STEP_DAYS) + 1;
        let last = (p.date - origin).num_days() + (5.0 * DAYS_PER_YEAR).floor() as i64;
        let b1 = last.div_euclid(CITER_STEP_DAYS);
        let nb = (b1 - b0 + 1).max(1);
        let offset = rng.random_range(0..nb);
        for j in 0..c {
            let (lane, slot) = if c <= nb {
                (0, (offset + j * nb / c) % nb)
            } else {
                ((j / nb) as u32, (offset + j) % nb)
            };
            citers.entry((lane, b0 + slot)).or_default().push(p.paper_id.clone());
        }
    }
    let focal_papers = papers.len();
    let citer_papers = citers.len();
    for ((lane, b), refs) in citers {
        let id = format!("z{lane}-{b:05}");
        papers.push(Paper {
            paper_id: id.clone(),
            date: bucket_date(b),
            authors: vec![format!("{id}-author")],
            codes: Vec::new(),
            refs,
            institutions: None,
            covariates: BTreeMap::new(),
        });
    }
    let corpus = Corpus::from_papers(papers, &scheme, &filter)?;
    truth.sort_by(|a, b| a.author_id.cmp(&b.author_id));
    let analysed = truth.iter().filter(|t| t.analysed).count();
    Ok(Synthetic {
        corpus,
        summary: SynthSummary {
            focal_authors: careers.authors.len(),
            analysed_authors: analysed,
            focal_papers,
            citer_papers,
            citations,
        },
        truth,
    })
}

/// Both phases in one call.
pub fn synthesize(config: &SynthConfig) -> Result<Synthetic> {
    plant(generate_careers(config)?, config)
}
