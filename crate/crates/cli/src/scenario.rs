//! Scenario files: a named object table plus a list of compute/verify tasks,
//! all in a fixed JSON schema.
//!
//! Encoding conventions: a complex scalar is a two-element array `[re, im]`;
//! a matrix is a row-major array of rows; an instrument is
//! `{dim_in, dim_out, outcomes: [{label, kraus: [matrix, …]}]}`; a model is
//! `{base_dim, aux_dim, interaction: <ref>, probe: <ref>}` with references
//! into the object table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use qinstruments::coexistence::{trivial_joint, verify_joint_instrument};
use qinstruments::families::{detect_holevo, detect_kraus, HolevoSpec};
use qinstruments::instrument::{conditioned, convex_combination, BiInstrument, Instrument};
use qinstruments::linalg::{ComplexMatrix, Tolerances};
use qinstruments::models::MeasurementModel;
use qinstruments::objects::{Observable, State};
use qinstruments::operation::Operation;

use crate::error::CliError;
use crate::report::{Report, TaskReport, TaskStatus};

pub type ComplexDto = [f64; 2];
pub type MatrixDto = Vec<Vec<ComplexDto>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<TolerancesDto>,
    #[serde(default)]
    pub objects: ObjectsDto,
    #[serde(default)]
    pub tasks: Vec<TaskDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesDto {
    pub hermitian_tol: f64,
    pub psd_tol: f64,
    pub trace_tol: f64,
    pub eq_tol: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectsDto {
    /// Raw PSD matrices, referenced by constructions such as trivial joints.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub matrices: BTreeMap<String, MatrixDto>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub states: BTreeMap<String, MatrixDto>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub observables: BTreeMap<String, ObservableDto>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub operations: BTreeMap<String, OperationDto>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub instruments: BTreeMap<String, InstrumentDto>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bi_instruments: BTreeMap<String, BiInstrumentDto>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub models: BTreeMap<String, ModelDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableDto {
    pub dim: usize,
    pub outcomes: Vec<EffectOutcomeDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectOutcomeDto {
    pub label: String,
    pub effect: MatrixDto,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperationDto {
    pub dim_in: usize,
    pub dim_out: usize,
    pub kraus: Vec<MatrixDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentDto {
    pub dim_in: usize,
    pub dim_out: usize,
    pub outcomes: Vec<KrausOutcomeDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrausOutcomeDto {
    pub label: String,
    pub kraus: Vec<MatrixDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiInstrumentDto {
    pub dim_in: usize,
    pub dim_out: usize,
    pub labels1: Vec<String>,
    pub labels2: Vec<String>,
    /// Row-major over (label1, label2).
    pub grid: Vec<Vec<MatrixDto>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDto {
    pub base_dim: usize,
    pub aux_dim: usize,
    pub interaction: String,
    pub probe: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskDto {
    /// tr(ρ·A_x) for every outcome; verifies against `expect` when present.
    RhoDistribution {
        name: String,
        observable: String,
        state: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<BTreeMap<String, f64>>,
    },
    /// Born-rule distribution of an instrument.
    BornDistribution {
        name: String,
        instrument: String,
        state: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<BTreeMap<String, f64>>,
    },
    /// Updated state after an outcome.
    UpdateState {
        name: String,
        instrument: String,
        outcome: String,
        state: String,
    },
    /// Binds the measured observable of an instrument.
    MeasuredObservable {
        name: String,
        result: String,
        instrument: String,
    },
    /// Binds (J | I).
    Conditioned {
        name: String,
        result: String,
        j: String,
        i: String,
    },
    /// Binds (I T J).
    Then {
        name: String,
        result: String,
        i: String,
        j: String,
    },
    /// Binds the sequential-product bi-instrument I ∘ J.
    SequentialProduct {
        name: String,
        result: String,
        i: String,
        j: String,
    },
    /// Binds Σ λ_i I_i.
    ConvexCombination {
        name: String,
        result: String,
        instruments: Vec<String>,
        weights: Vec<f64>,
    },
    /// Binds a post-processing of an instrument.
    PostProcess {
        name: String,
        result: String,
        instrument: String,
        lambda: Vec<Vec<f64>>,
        labels: Vec<String>,
    },
    /// Binds the one-outcome instrument carrying the channel of another.
    Channel {
        name: String,
        result: String,
        instrument: String,
        label: String,
    },
    /// Binds a mixed marginal of a bi-instrument; `which` is one of
    /// "11", "22", "21", "12" (superscript = kept outcome, subscript = kept
    /// factor).
    MixedMarginal {
        name: String,
        result: String,
        bi_instrument: String,
        n1: usize,
        n2: usize,
        which: String,
    },
    /// Binds the trivial joint K_xy = I_x ⊗ β_y; betas reference the raw
    /// matrix table.
    TrivialJoint {
        name: String,
        result: String,
        instrument: String,
        betas: Vec<BetaDto>,
    },
    /// Binds the Lüders instrument of an observable.
    Lueders {
        name: String,
        result: String,
        observable: String,
    },
    /// Binds a Holevo instrument from an observable and per-outcome states.
    Holevo {
        name: String,
        result: String,
        observable: String,
        states: Vec<String>,
    },
    /// Verifies map-level equality of two instruments.
    InstrumentsEqual {
        name: String,
        left: String,
        right: String,
    },
    /// Verifies a joint bi-instrument certificate for two instruments.
    VerifyJointInstrument {
        name: String,
        joint: String,
        first: String,
        second: String,
        n1: usize,
        n2: usize,
    },
    /// Checks Holevo structure; verifies against `expect_present`.
    DetectHolevo {
        name: String,
        instrument: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect_present: Option<bool>,
    },
    /// Checks Kraus structure; verifies against `expect_present`.
    DetectKraus {
        name: String,
        instrument: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect_present: Option<bool>,
    },
    /// Binds the observable measured by a measurement model.
    ModelMeasuredObservable {
        name: String,
        result: String,
        model: String,
    },
    /// Binds the instrument measured by a measurement model.
    ModelMeasuredInstrument {
        name: String,
        result: String,
        model: String,
    },
}

impl TaskDto {
    pub fn name(&self) -> &str {
        match self {
            TaskDto::RhoDistribution { name, .. }
            | TaskDto::BornDistribution { name, .. }
            | TaskDto::UpdateState { name, .. }
            | TaskDto::MeasuredObservable { name, .. }
            | TaskDto::Conditioned { name, .. }
            | TaskDto::Then { name, .. }
            | TaskDto::SequentialProduct { name, .. }
            | TaskDto::ConvexCombination { name, .. }
            | TaskDto::PostProcess { name, .. }
            | TaskDto::Channel { name, .. }
            | TaskDto::MixedMarginal { name, .. }
            | TaskDto::TrivialJoint { name, .. }
            | TaskDto::Lueders { name, .. }
            | TaskDto::Holevo { name, .. }
            | TaskDto::InstrumentsEqual { name, .. }
            | TaskDto::VerifyJointInstrument { name, .. }
            | TaskDto::DetectHolevo { name, .. }
            | TaskDto::DetectKraus { name, .. }
            | TaskDto::ModelMeasuredObservable { name, .. }
            | TaskDto::ModelMeasuredInstrument { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaDto {
    pub label: String,
    pub matrix: String,
}

// ---------------------------------------------------------------------------
// DTO <-> core conversions
// ---------------------------------------------------------------------------

pub fn matrix_from_dto(dto: &MatrixDto) -> Result<ComplexMatrix, CliError> {
    let rows = dto.len();
    let cols = dto.first().map_or(0, Vec::len);
    if dto.iter().any(|row| row.len() != cols) {
        return Err(CliError::Invariant(
            "matrix rows must all have the same length".into(),
        ));
    }
    let mut entries = Vec::with_capacity(rows * cols);
    for row in dto {
        for &[re, im] in row {
            entries.push(qinstruments::Complex64::new(re, im));
        }
    }
    ComplexMatrix::new(rows, cols, entries).map_err(|e| CliError::Invariant(e.to_string()))
}

pub fn matrix_to_dto(m: &ComplexMatrix) -> MatrixDto {
    (0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| {
                    let v = m.get(i, j);
                    [v.re, v.im]
                })
                .collect()
        })
        .collect()
}

pub fn instrument_to_dto(inst: &Instrument) -> InstrumentDto {
    InstrumentDto {
        dim_in: inst.dim_in(),
        dim_out: inst.dim_out(),
        outcomes: inst
            .outcomes()
            .iter()
            .map(|(label, op)| KrausOutcomeDto {
                label: label.clone(),
                kraus: op.kraus().iter().map(matrix_to_dto).collect(),
            })
            .collect(),
    }
}

pub fn observable_to_dto(obs: &Observable) -> ObservableDto {
    ObservableDto {
        dim: obs.dim(),
        outcomes: obs
            .outcomes()
            .iter()
            .map(|(label, e)| EffectOutcomeDto {
                label: label.clone(),
                effect: matrix_to_dto(e.matrix()),
            })
            .collect(),
    }
}

pub fn bi_instrument_to_dto(bi: &BiInstrument) -> BiInstrumentDto {
    BiInstrumentDto {
        dim_in: bi.dim_in(),
        dim_out: bi.dim_out(),
        labels1: bi.labels1().to_vec(),
        labels2: bi.labels2().to_vec(),
        grid: bi
            .grid()
            .iter()
            .map(|op| op.kraus().iter().map(matrix_to_dto).collect())
            .collect(),
    }
}

/// Loaded scenario: validated objects plus the task list.
#[derive(Debug)]
pub struct Scenario {
    pub tolerances: Tolerances,
    pub matrices: BTreeMap<String, ComplexMatrix>,
    pub states: BTreeMap<String, State>,
    pub observables: BTreeMap<String, Observable>,
    pub operations: BTreeMap<String, Operation>,
    pub instruments: BTreeMap<String, Instrument>,
    pub bi_instruments: BTreeMap<String, BiInstrument>,
    pub models: BTreeMap<String, MeasurementModel>,
    pub tasks: Vec<TaskDto>,
}

pub fn parse_scenario(text: &str) -> Result<ScenarioFile, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn load_scenario(text: &str) -> Result<Scenario, CliError> {
    let file = parse_scenario(text)?;
    build_scenario(&file)
}

pub fn build_scenario(file: &ScenarioFile) -> Result<Scenario, CliError> {
    let tolerances = match &file.tolerances {
        Some(t) => Tolerances {
            hermitian_tol: t.hermitian_tol,
            psd_tol: t.psd_tol,
            trace_tol: t.trace_tol,
            eq_tol: t.eq_tol,
        },
        None => Tolerances::default(),
    };
    tolerances
        .validate()
        .map_err(|e| CliError::Invariant(e.to_string()))?;

    let mut scenario = Scenario {
        tolerances,
        matrices: BTreeMap::new(),
        states: BTreeMap::new(),
        observables: BTreeMap::new(),
        operations: BTreeMap::new(),
        instruments: BTreeMap::new(),
        bi_instruments: BTreeMap::new(),
        models: BTreeMap::new(),
        tasks: file.tasks.clone(),
    };

    for (name, dto) in &file.objects.matrices {
        scenario
            .matrices
            .insert(name.clone(), matrix_from_dto(dto)?);
    }
    for (name, dto) in &file.objects.states {
        let mat = matrix_from_dto(dto)?;
        let state = State::new(mat, &scenario.tolerances)
            .map_err(|e| CliError::Invariant(format!("state `{name}`: {e}")))?;
        scenario.states.insert(name.clone(), state);
    }
    for (name, dto) in &file.objects.observables {
        let outcomes = dto
            .outcomes
            .iter()
            .map(|o| Ok((o.label.clone(), matrix_from_dto(&o.effect)?)))
            .collect::<Result<Vec<_>, CliError>>()?;
        let obs = Observable::from_matrices(outcomes, &scenario.tolerances)
            .map_err(|e| CliError::Invariant(format!("observable `{name}`: {e}")))?;
        if obs.dim() != dto.dim {
            return Err(CliError::Invariant(format!(
                "observable `{name}`: declared dim {} but effects are {}x{}",
                dto.dim,
                obs.dim(),
                obs.dim()
            )));
        }
        scenario.observables.insert(name.clone(), obs);
    }
    for (name, dto) in &file.objects.operations {
        let kraus = dto
            .kraus
            .iter()
            .map(matrix_from_dto)
            .collect::<Result<Vec<_>, _>>()?;
        let op = Operation::new(dto.dim_in, dto.dim_out, kraus, &scenario.tolerances)
            .map_err(|e| CliError::Invariant(format!("operation `{name}`: {e}")))?;
        scenario.operations.insert(name.clone(), op);
    }
    for (name, dto) in &file.objects.instruments {
        let outcomes = dto
            .outcomes
            .iter()
            .map(|o| {
                let kraus = o
                    .kraus
                    .iter()
                    .map(matrix_from_dto)
                    .collect::<Result<Vec<_>, _>>()?;
                let op = Operation::new(dto.dim_in, dto.dim_out, kraus, &scenario.tolerances)
                    .map_err(|e| {
                        CliError::Invariant(format!(
                            "instrument `{name}` outcome `{}`: {e}",
                            o.label
                        ))
                    })?;
                Ok((o.label.clone(), op))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let inst = Instrument::new(outcomes, &scenario.tolerances)
            .map_err(|e| CliError::Invariant(format!("instrument `{name}`: {e}")))?;
        scenario.instruments.insert(name.clone(), inst);
    }
    for (name, dto) in &file.objects.bi_instruments {
        if dto.grid.len() != dto.labels1.len() * dto.labels2.len() {
            return Err(CliError::Invariant(format!(
                "bi-instrument `{name}`: grid covers {} cells, expected {}",
                dto.grid.len(),
                dto.labels1.len() * dto.labels2.len()
            )));
        }
        let grid = dto
            .grid
            .iter()
            .map(|kraus_list| {
                let kraus = kraus_list
                    .iter()
                    .map(matrix_from_dto)
                    .collect::<Result<Vec<_>, _>>()?;
                Operation::new(dto.dim_in, dto.dim_out, kraus, &scenario.tolerances)
                    .map_err(|e| CliError::Invariant(format!("bi-instrument `{name}`: {e}")))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let bi = BiInstrument::new(
            dto.labels1.clone(),
            dto.labels2.clone(),
            grid,
            &scenario.tolerances,
        )
        .map_err(|e| CliError::Invariant(format!("bi-instrument `{name}`: {e}")))?;
        scenario.bi_instruments.insert(name.clone(), bi);
    }
    for (name, dto) in &file.objects.models {
        let interaction = scenario
            .instruments
            .get(&dto.interaction)
            .ok_or_else(|| {
                CliError::Reference(format!(
                    "model `{name}` references unknown instrument `{}`",
                    dto.interaction
                ))
            })?
            .clone();
        let probe = scenario
            .observables
            .get(&dto.probe)
            .ok_or_else(|| {
                CliError::Reference(format!(
                    "model `{name}` references unknown observable `{}`",
                    dto.probe
                ))
            })?
            .clone();
        let model = MeasurementModel::new(dto.base_dim, dto.aux_dim, interaction, probe)
            .map_err(|e| CliError::Invariant(format!("model `{name}`: {e}")))?;
        scenario.models.insert(name.clone(), model);
    }
    Ok(scenario)
}

/// Re-encodes the loaded objects (not the tasks' bindings) back to DTO form.
/// Model components are emitted under synthetic `<model>.interaction` /
/// `<model>.probe` names so the references resolve on reload.
pub fn scenario_to_file(s: &Scenario) -> ScenarioFile {
    let mut file = ScenarioFile {
        tolerances: Some(TolerancesDto {
            hermitian_tol: s.tolerances.hermitian_tol,
            psd_tol: s.tolerances.psd_tol,
            trace_tol: s.tolerances.trace_tol,
            eq_tol: s.tolerances.eq_tol,
        }),
        objects: ObjectsDto {
            matrices: s
                .matrices
                .iter()
                .map(|(k, v)| (k.clone(), matrix_to_dto(v)))
                .collect(),
            states: s
                .states
                .iter()
                .map(|(k, v)| (k.clone(), matrix_to_dto(v.matrix())))
                .collect(),
            observables: s
                .observables
                .iter()
                .map(|(k, v)| (k.clone(), observable_to_dto(v)))
                .collect(),
            operations: s
                .operations
                .iter()
                .map(|(k, v)| {
                    (
                        k.clone(),
                        OperationDto {
                            dim_in: v.dim_in(),
                            dim_out: v.dim_out(),
                            kraus: v.kraus().iter().map(matrix_to_dto).collect(),
                        },
                    )
                })
                .collect(),
            instruments: s
                .instruments
                .iter()
                .map(|(k, v)| (k.clone(), instrument_to_dto(v)))
                .collect(),
            bi_instruments: s
                .bi_instruments
                .iter()
                .map(|(k, v)| (k.clone(), bi_instrument_to_dto(v)))
                .collect(),
            models: s
                .models
                .iter()
                .map(|(k, v)| {
                    (
                        k.clone(),
                        ModelDto {
                            base_dim: v.base_dim(),
                            aux_dim: v.aux_dim(),
                            interaction: format!("{k}.interaction"),
                            probe: format!("{k}.probe"),
                        },
                    )
                })
                .collect(),
        },
        tasks: s.tasks.clone(),
    };
    for (k, v) in &s.models {
        file.objects.instruments.insert(
            format!("{k}.interaction"),
            instrument_to_dto(v.interaction()),
        );
        file.objects
            .observables
            .insert(format!("{k}.probe"), observable_to_dto(v.probe()));
    }
    file
}

// ---------------------------------------------------------------------------
// Task execution
// ---------------------------------------------------------------------------

fn get<'a, T>(table: &'a BTreeMap<String, T>, key: &str, what: &str) -> Result<&'a T, CliError> {
    table
        .get(key)
        .ok_or_else(|| CliError::Reference(format!("unknown {what} `{key}`")))
}

fn distribution_outputs(dist: &[(String, f64)]) -> serde_json::Value {
    serde_json::Value::Array(
        dist.iter()
            .map(|(label, p)| serde_json::json!([label, p]))
            .collect(),
    )
}

fn check_expectation(
    dist: &[(String, f64)],
    expect: &BTreeMap<String, f64>,
    tol: &Tolerances,
) -> Result<(TaskStatus, f64), CliError> {
    let mut residual = 0.0f64;
    for (label, want) in expect {
        let got = dist
            .iter()
            .find(|(l, _)| l == label)
            .ok_or_else(|| CliError::Reference(format!("expected outcome `{label}` not present")))?
            .1;
        residual = residual.max((got - want).abs());
    }
    let status = if residual <= tol.eq_tol {
        TaskStatus::Pass
    } else {
        TaskStatus::Fail
    };
    Ok((status, residual))
}

/// Runs every task in order against the loaded object table. Construct tasks
/// bind their results for later tasks; verify tasks produce pass/fail rows.
pub fn run_scenario(scenario: &mut Scenario) -> Result<Report, CliError> {
    let tol = scenario.tolerances;
    let mut rows = Vec::with_capacity(scenario.tasks.len());
    let tasks = scenario.tasks.clone();
    for task in &tasks {
        let row = run_task(scenario, task, &tol)?;
        rows.push(row);
    }
    Ok(Report { tasks: rows })
}

fn run_task(
    scenario: &mut Scenario,
    task: &TaskDto,
    tol: &Tolerances,
) -> Result<TaskReport, CliError> {
    let core_err = |e: qinstruments::Error| CliError::Invariant(e.to_string());
    match task {
        TaskDto::RhoDistribution {
            name,
            observable,
            state,
            expect,
        } => {
            let obs = get(&scenario.observables, observable, "observable")?;
            let rho = get(&scenario.states, state, "state")?;
            let dist = obs.rho_distribution(rho, tol).map_err(core_err)?;
            let outputs = distribution_outputs(&dist);
            let (status, residual) = match expect {
                Some(e) => {
                    let (s, r) = check_expectation(&dist, e, tol)?;
                    (s, Some(r))
                }
                None => (TaskStatus::Computed, None),
            };
            Ok(TaskReport::new(name, status, residual, outputs))
        }
        TaskDto::BornDistribution {
            name,
            instrument,
            state,
            expect,
        } => {
            let inst = get(&scenario.instruments, instrument, "instrument")?;
            let rho = get(&scenario.states, state, "state")?;
            let dist = inst.born_distribution(rho, tol).map_err(core_err)?;
            let outputs = distribution_outputs(&dist);
            let (status, residual) = match expect {
                Some(e) => {
                    let (s, r) = check_expectation(&dist, e, tol)?;
                    (s, Some(r))
                }
                None => (TaskStatus::Computed, None),
            };
            Ok(TaskReport::new(name, status, residual, outputs))
        }
        TaskDto::UpdateState {
            name,
            instrument,
            outcome,
            state,
        } => {
            let inst = get(&scenario.instruments, instrument, "instrument")?;
            let rho = get(&scenario.states, state, "state")?;
            let updated = inst.update_state(outcome, rho, tol).map_err(core_err)?;
            let outputs = serde_json::json!({ "state": matrix_to_dto(updated.matrix()) });
            Ok(TaskReport::new(name, TaskStatus::Computed, None, outputs))
        }
        TaskDto::MeasuredObservable {
            name,
            result,
            instrument,
        } => {
            let inst = get(&scenario.instruments, instrument, "instrument")?;
            let hat = inst.measured_observable(tol).map_err(core_err)?;
            let outputs = serde_json::json!({ "observable": observable_to_dto(&hat) });
            scenario.observables.insert(result.clone(), hat);
            Ok(TaskReport::new(name, TaskStatus::Computed, None, outputs))
        }
        TaskDto::Conditioned { name, result, j, i } => {
            let ji = get(&scenario.instruments, j, "instrument")?;
            let ii = get(&scenario.instruments, i, "instrument")?;
            let cond = conditioned(ji, ii, tol).map_err(core_err)?;
            scenario.instruments.insert(result.clone(), cond);
            Ok(TaskReport::new(
                name,
                TaskStatus::Computed,
                None,
                serde_json::json!({}),
            ))
        }
        TaskDto::Then { name, result, i, j } => {
            let ii = get(&scenario.instruments, i, "instrument")?;
            let ji = get(&scenario.instruments, j, "instrument")?;
            let then = ii.then(ji, tol).map_err(core_err)?;
            scenario.instruments.insert(result.clone(), then);
            Ok(TaskReport::new(
                name,
                TaskStatus::Computed,
                None,
                serde_json::json!({}),
            ))
        }
        TaskDto::SequentialProduct { name, result, i, j } => {
            let ii = get(&scenario.instruments, i, "instrument")?;
            let ji = get(&scenario.instruments, j, "instrument")?;
            let seq = ii.sequential_product(ji, tol).map_err(core_err)?;
            scenario.bi_instruments.insert(result.clone(), seq);
            Ok(TaskReport::new(
                name,
                TaskStatus::Computed,
                None,
                serde_json::json!({}),
            ))
        }
        TaskDto::ConvexCombination {
            name,
            result,
            instruments,
            weights,
        } => {
            let members = instruments
                .iter()
                .map(|r| get(&scenario.instruments, r, "instrument").cloned())
                .collect::<Result<Vec<_>, _>>()?;
            let mix = convex_combination(&members, weights, tol).map_err(core_err)?;
            scenario.instruments.insert(result.clone(), mix);
            Ok(TaskReport::new(
                name,
                TaskStatus::Computed,
                None,
                serde_json::json!({}),
            ))
        }
        TaskDto::PostProcess {
            name,
            result,
            instrument,
            lambda,
            labels,
        } => {
            let inst = get(&scenario.instruments, instrument, "instrument")?;
            let processed = inst.post_process(lambda, labels, tol).map_err(core_err)?;
            scenario.instruments.insert(result.clone(), processed);
            Ok(TaskReport::new(
                name,
                TaskStatus::Computed,
                None,
                serde_json::json!({}),
            ))
        }
        TaskDto::Channel {
            name,
            result,
            instrument,
            label,
        } => {
            let inst = get(&scenario.instruments, instrument, "instrument")?;
            let chan = Instrument::from_channel(label, inst.channel(), tol).map_err(core_err)?;
            scenario.instruments.insert(result.clone(), chan);
            Ok(TaskReport::new(
                name,
                TaskStatus::Computed,
                None,
                serde_json::json!({}),
            ))
        }
        TaskDto::MixedMarginal {
            name,
            result,
            bi_instrument,
            n1,
            n2,
            which,
        } => {
            let bi = get(&scenario.bi_instruments, bi_instrument, "bi-instrument")?;
            let mm = bi.mixed_marginals(*n1, *n2, tol).map_err(core_err)?;
            let chosen = match which.as_str() {
                "11" => mm.first_factor_by_x,
                "22" => mm.second_factor_by_y,
                "21" => mm.first_factor_by_y,
                "12" => mm.second_factor_by_x,
                other => {
                    return Err(CliError::Reference(format!(
                        "unknown mixed marginal `{other}` (expected 11, 22, 21 or 12)"
                    )))
                }
            };
            scenario.instruments.insert(result.clone(), chosen);
            Ok(TaskReport::new(
                name,
                TaskStatus::Computed,
                None,
                serde_json::json!({}),
            ))
        }
        TaskDto::TrivialJoint {
            name,
            result,
            instrument,
            betas,
        } => {
            let inst = get(&scenario.instruments, instrument, "instrument")?;
            let beta_mats = betas
                .iter()
                .map(|b| {
                    get(&scenario.matrices, &b.matrix, "matrix")
                        .map(|m| (b.label.clone(), m.clone()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let joint = trivial_joint(inst, &beta_mats, tol).map_err(core_err)?;
            scenario.bi_instruments.insert(result.clone(), joint);
            Ok(TaskReport::new(
                name,
                TaskStatus::Computed,
                None,
                serde_json::json!({}),
            ))
        }
        TaskDto::Lueders {
            name,
            result,
            observable,
        } => {
            let obs = get(&scenario.observables, observable, "observable")?;
            let inst = qinstruments::families::lueders(obs, tol).map_err(core_err)?;
            scenario.instruments.insert(result.clone(), inst);
            Ok(TaskReport::new(
                name,
                TaskStatus::Computed,
                None,
                serde_json::json!({}),
            ))
        }
        TaskDto::Holevo {
            name,
            result,
            observable,
            states,
        } => {
            let obs = get(&scenario.observables, observable, "observable")?.clone();
            let state_values = states
                .iter()
                .map(|r| get(&scenario.states, r, "state").cloned())
                .collect::<Result<Vec<_>, _>>()?;
            let spec = HolevoSpec::new(obs, state_values).map_err(core_err)?;
            let inst = spec.to_instrument(tol).map_err(core_err)?;
            scenario.instruments.insert(result.clone(), inst);
            Ok(TaskReport::new(
                name,
                TaskStatus::Computed,
                None,
                serde_json::json!({}),
            ))
        }
        TaskDto::InstrumentsEqual { name, left, right } => {
            let l = get(&scenario.instruments, left, "instrument")?;
            let r = get(&scenario.instruments, right, "instrument")?;
            let distance = l.map_distance(r);
            let (status, residual) = if distance.is_finite() {
                (
                    if distance <= tol.eq_tol {
                        TaskStatus::Pass
                    } else {
                        TaskStatus::Fail
                    },
                    Some(distance),
                )
            } else {
                (TaskStatus::Fail, None)
            };
            Ok(TaskReport::new(
                name,
                status,
                residual,
                serde_json::json!({}),
            ))
        }
        TaskDto::VerifyJointInstrument {
            name,
            joint,
            first,
            second,
            n1,
            n2,
        } => {
            let k = get(&scenario.bi_instruments, joint, "bi-instrument")?;
            let i = get(&scenario.instruments, first, "instrument")?;
            let j = get(&scenario.instruments, second, "instrument")?;
            let cert = verify_joint_instrument(k, i, j, *n1, *n2, tol).map_err(core_err)?;
            let status = if cert.pass {
                TaskStatus::Pass
            } else {
                TaskStatus::Fail
            };
            let outputs = serde_json::json!({
                "residual_1": cert.residual_1,
                "residual_2": cert.residual_2,
            });
            Ok(TaskReport::new(
                name,
                status,
                Some(cert.max_residual()),
                outputs,
            ))
        }
        TaskDto::DetectHolevo {
            name,
            instrument,
            expect_present,
        } => {
            let inst = get(&scenario.instruments, instrument, "instrument")?;
            let present = detect_holevo(inst, tol).is_some();
            let outputs = serde_json::json!({ "present": present });
            let status = match expect_present {
                Some(want) => {
                    if present == *want {
                        TaskStatus::Pass
                    } else {
                        TaskStatus::Fail
                    }
                }
                None => TaskStatus::Computed,
            };
            Ok(TaskReport::new(name, status, None, outputs))
        }
        TaskDto::DetectKraus {
            name,
            instrument,
            expect_present,
        } => {
            let inst = get(&scenario.instruments, instrument, "instrument")?;
            let present = detect_kraus(inst, tol).is_some();
            let outputs = serde_json::json!({ "present": present });
            let status = match expect_present {
                Some(want) => {
                    if present == *want {
                        TaskStatus::Pass
                    } else {
                        TaskStatus::Fail
                    }
                }
                None => TaskStatus::Computed,
            };
            Ok(TaskReport::new(name, status, None, outputs))
        }
        TaskDto::ModelMeasuredObservable {
            name,
            result,
            model,
        } => {
            let m = get(&scenario.models, model, "model")?;
            let hat = m.measured_observable(tol).map_err(core_err)?;
            let outputs = serde_json::json!({ "observable": observable_to_dto(&hat) });
            scenario.observables.insert(result.clone(), hat);
            Ok(TaskReport::new(name, TaskStatus::Computed, None, outputs))
        }
        TaskDto::ModelMeasuredInstrument {
            name,
            result,
            model,
        } => {
            let m = get(&scenario.models, model, "model")?;
            let measured = m.measured_instrument(tol).map_err(core_err)?;
            scenario.instruments.insert(result.clone(), measured);
            Ok(TaskReport::new(
                name,
                TaskStatus::Computed,
                None,
                serde_json::json!({}),
            ))
        }
    }
}

/// Validates a scenario file: parse, build all objects, resolve all task
/// references without executing verification logic.
pub fn validate_scenario(text: &str) -> Result<(), CliError> {
    let mut scenario = load_scenario(text)?;
    // Dry-run bindings to catch dangling references; verification outcomes
    // are ignored here.
    let _ = run_scenario(&mut scenario)?;
    Ok(())
}
