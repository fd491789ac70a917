use prefmine::eval::EvalError;
use prefmine::graph::GraphError;
use prefmine::preference::PreferenceError;
use prefmine::routing::RoutingError;
use prefmine::segmentation::SegmentationError;
use prefmine::stitching::StitchError;
use prefmine::synth::SynthError;
use prefmine::trajectory::TrajectoryError;
use thiserror::Error;

/// Failure of a subcommand, classified by process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    /// Prefixes the message with a trajectory id, keeping the class.
    pub fn for_trajectory(self, id: &str) -> Self {
        let wrap = |m: String| format!("trajectory `{id}`: {m}");
        match self {
            CliError::Usage(m) => CliError::Usage(wrap(m)),
            CliError::Data(m) => CliError::Data(wrap(m)),
            CliError::Internal(m) => CliError::Internal(wrap(m)),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<TrajectoryError> for CliError {
    fn from(e: TrajectoryError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<StitchError> for CliError {
    fn from(e: StitchError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<RoutingError> for CliError {
    fn from(e: RoutingError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Config(m) => CliError::Usage(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<PreferenceError> for CliError {
    fn from(e: PreferenceError) -> Self {
        match e {
            PreferenceError::Routing(r) => r.into(),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<SegmentationError> for CliError {
    fn from(e: SegmentationError) -> Self {
        match e {
            SegmentationError::Routing(r) => r.into(),
            SegmentationError::Preference(p) => p.into(),
            SegmentationError::EmptyTrajectory => CliError::Data(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::NotShortest { .. } => CliError::Internal(e.to_string()),
            EvalError::Routing(r) => r.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}
