"""Exception hierarchy shared by all abelquad modules."""


class AbelQuadError(Exception):
    """Base class for every error raised by this package."""


class MeshError(AbelQuadError):
    """Malformed or unsupported mesh input."""


class UnsupportedFaceDegree(MeshError):
    pass


class NonManifoldError(MeshError):
    pass


class OrientationError(MeshError):
    pass


class EmptyMeshError(MeshError):
    pass


class TopologyError(AbelQuadError):
    """Operation called on a surface of the wrong topological type."""


class DependentLoopsError(AbelQuadError):
    pass


class NonUnimodular(AbelQuadError):
    """Intersection matrix of the generators is not unimodular over Z."""


class SliceError(AbelQuadError):
    def __init__(self, message, edges=()):
        super().__init__(message)
        self.edges = list(edges)


class DegenerateTriangleError(AbelQuadError):
    def __init__(self, message, triangle=None):
        super().__init__(message)
        self.triangle = triangle


class SingularSystemError(AbelQuadError):
    pass


class ZeroOnEdgeError(AbelQuadError):
    pass


class DegeneratePeriodLattice(AbelQuadError):
    pass


class BranchTear(AbelQuadError):
    def __init__(self, message, edge=None):
        super().__init__(message)
        self.edge = edge


class FlippedTriangles(AbelQuadError):
    def __init__(self, message, count=0):
        super().__init__(message)
        self.count = count


class SingularityError(AbelQuadError):
    """Invalid pole/zero configuration (coincident points, snapping clash)."""
