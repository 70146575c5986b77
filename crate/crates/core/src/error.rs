use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    /// Direction's x-component is too small for the slope parameterization.
    #[error("line direction too steep in x (|dir.x| <= tau_dir * |dir|)")]
    SteepLine,
    /// Line is z-vertical, so it has no xy-projection direction.
    #[error("line is z-vertical; xy projection is a point")]
    DegenerateProjection,
    /// The two points project to the same frame ordinate, so the requested
    /// bisector surface is at infinity.
    #[error("bisector undefined: projected ordinates coincide")]
    DegenerateBisector,
    /// Line parallel to the frame axis; it pierces the frame plane nowhere
    /// or everywhere.
    #[error("line parallel to frame axis")]
    DegenerateFrame,
    /// Envelope of zero members has no value.
    #[error("empty family has no envelope")]
    EmptyFamily,
    /// Two family members coincide as surfaces; the diagram would be
    /// ambiguous without perturbation.
    #[error("family contains coincident surfaces")]
    DegenerateFamily,
    /// Query point lies outside the decomposed region.
    #[error("query point is outside the decomposed region")]
    NotInRegion,
    /// No sample satisfied the conflict-list contract within the attempt
    /// budget.
    #[error("cutting contract unsatisfied after {attempts} attempts")]
    CuttingFailure { attempts: usize },
}
