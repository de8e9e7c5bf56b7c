use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("degenerate segment: endpoints closer than 1e-9 px")]
    DegenerateSegment,
    #[error("point is behind the camera (depth {depth})")]
    BehindCamera { depth: f64 },

    #[error("great-circle normals are coplanar; no unique intersection")]
    CoplanarNormals,
    #[error("insufficient lines: need at least {needed}, got {got}")]
    InsufficientLines { needed: usize, got: usize },
    #[error("polar grid holds no positive score")]
    EmptyGrid,

    #[error("degenerate cluster: great circles do not span two dimensions")]
    DegenerateCluster,
    #[error("directions are not close enough to orthogonal to form a frame")]
    NotFrameLike,
    #[error("no vanishing direction matched the Manhattan frame")]
    NoMatch,
    #[error("rotation is underconstrained: need at least 2 matched axes, got {0}")]
    Underconstrained(usize),

    #[error("insufficient point correspondences: need at least {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("translation system is rank deficient (condition number {condition:e})")]
    RankDeficient { condition: f64 },
    #[error("no consensus: best inlier set has {best} correspondences, need {needed}")]
    NoConsensus { best: usize, needed: usize },

    #[error("nothing visible from the requested pose")]
    EmptyView,

    #[error("insufficient observations: {0}")]
    InsufficientObservations(String),
    #[error("no prior pose to propagate")]
    NoPrior,
    #[error("frame {frame}: {source}")]
    Frame {
        frame: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("empty observation sequence")]
    EmptySequence,

    /// `origin` is a file path or another label for the parsed text.
    #[error("{origin}:{line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },
    #[error("insufficient associated pose pairs: need at least 3, got {0}")]
    InsufficientPairs(usize),
    #[error("associated positions are collinear; alignment is not unique")]
    CollinearDegenerate,

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn at_frame(self, frame: usize) -> Self {
        Error::Frame {
            frame,
            source: Box::new(self),
        }
    }
}
