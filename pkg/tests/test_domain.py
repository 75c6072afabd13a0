import math

import pytest

from ecosense.domain import (
    BadClassIndexError,
    BoundingBox,
    ChannelProfile,
    ClassCatalog,
    DegenerateBoxError,
    DomainError,
    Frame,
    OutOfBoundsBoxError,
    PlatformProfile,
    Proposal,
    crop_bytes_for,
    validate_frame,
)

SEASHIPS_NAMES = (
    "bulk cargo carrier",
    "container ship",
    "fishing boat",
    "general cargo ship",
    "ore carrier",
    "passenger ship",
)


def make_proposal(x0=10.0, y0=10.0, x1=50.0, y1=40.0, objectness=0.9, true_class=0):
    box = BoundingBox(x0, y0, x1, y1)
    return Proposal(box=box, objectness=objectness, true_class=true_class,
                    crop_bytes=crop_bytes_for(box))


class TestBoundingBox:
    def test_valid_box(self):
        box = BoundingBox(0.0, 0.0, 10.5, 20.0)
        assert box.width == 10.5
        assert box.area == 10.5 * 20.0

    @pytest.mark.parametrize(
        "coords",
        [
            (10, 0, 10, 5),  # zero width
            (0, 8, 5, 8),  # zero height
            (5, 0, 2, 5),  # inverted x
            (0, 5, 5, 2),  # inverted y
            (-1, 0, 5, 5),  # negative coordinate
            (0, 0, math.inf, 5),
            (0, 0, math.nan, 5),
        ],
    )
    def test_rejects_degenerate(self, coords):
        with pytest.raises(DegenerateBoxError):
            BoundingBox(*coords)

    def test_round_trip(self):
        box = BoundingBox(1.25, 2.5, 30.0, 44.75)
        assert BoundingBox.from_dict(box.to_dict()) == box


class TestProposal:
    def test_rejects_objectness_outside_unit_interval(self):
        with pytest.raises(DomainError):
            make_proposal(objectness=1.5)
        with pytest.raises(DomainError):
            make_proposal(objectness=-0.1)

    def test_rejects_negative_class(self):
        with pytest.raises(BadClassIndexError):
            make_proposal(true_class=-1)

    def test_rejects_nonpositive_crop_bytes(self):
        box = BoundingBox(0, 0, 10, 10)
        with pytest.raises(DomainError):
            Proposal(box=box, objectness=0.5, true_class=0, crop_bytes=0)

    def test_round_trip(self):
        prop = make_proposal()
        assert Proposal.from_dict(prop.to_dict()) == prop


class TestCropBytes:
    def test_matches_ceil_of_area_times_rate(self):
        box = BoundingBox(0, 0, 10, 10)
        assert crop_bytes_for(box, 3.0) == 300
        assert crop_bytes_for(box, 2.5) == 250
        # Fractional area rounds up.
        small = BoundingBox(0, 0, 0.5, 0.5)
        assert crop_bytes_for(small, 3.0) == math.ceil(0.75)

    def test_monotone_in_area(self):
        sides = [1, 2, 5, 17, 64, 301.5]
        sizes = [crop_bytes_for(BoundingBox(0, 0, s, s)) for s in sides]
        assert sizes == sorted(sizes)
        assert all(b > 0 for b in sizes)

    def test_rejects_bad_rate(self):
        with pytest.raises(DomainError):
            crop_bytes_for(BoundingBox(0, 0, 1, 1), 0.0)


class TestFrame:
    def test_rejects_nonpositive_bytes(self):
        with pytest.raises(DomainError):
            Frame(frame_id=0, width=640, height=480, bytes=0, objects=())

    def test_round_trip(self):
        frame = Frame(0, 640, 480, 640 * 480 * 3, (make_proposal(),))
        assert Frame.from_dict(frame.to_dict()) == frame


class TestClassCatalog:
    def test_seaships_catalog(self):
        catalog = ClassCatalog(SEASHIPS_NAMES)
        assert catalog.num_classes == 6

    def test_rejects_single_class(self):
        with pytest.raises(DomainError):
            ClassCatalog(("only",))

    def test_rejects_duplicates(self):
        with pytest.raises(DomainError):
            ClassCatalog(("a", "b", "a"))

    def test_round_trip(self):
        catalog = ClassCatalog(SEASHIPS_NAMES)
        assert ClassCatalog.from_dict(catalog.to_dict()) == catalog


class TestPlatformProfile:
    def test_energy_per_inference(self):
        tpu = PlatformProfile("TPU Dev", latency_ms=9, power_w=3.47, role="edge")
        assert tpu.energy_per_inference_j == pytest.approx(0.031230, abs=1e-9)

    @pytest.mark.parametrize("kwargs", [
        {"latency_ms": 0},
        {"power_w": -1},
        {"role": "fog"},
    ])
    def test_rejects_bad_fields(self, kwargs):
        base = {"name": "x", "latency_ms": 10.0, "power_w": 1.0, "role": "edge"}
        with pytest.raises(DomainError):
            PlatformProfile(**{**base, **kwargs})

    def test_round_trip(self):
        profile = PlatformProfile("Alveo U200", 16.8, 17.8, "cloud")
        assert PlatformProfile.from_dict(profile.to_dict()) == profile


class TestChannelProfile:
    def test_rejects_nonpositive_fields(self):
        with pytest.raises(DomainError):
            ChannelProfile(0, 1e-7, 256)
        with pytest.raises(DomainError):
            ChannelProfile(1e6, 0, 256)
        with pytest.raises(DomainError):
            ChannelProfile(1e6, 1e-7, 0)

    def test_round_trip(self):
        channel = ChannelProfile(1.25e6, 8.6e-8, 256)
        assert ChannelProfile.from_dict(channel.to_dict()) == channel


class TestValidateFrame:
    def setup_method(self):
        self.catalog = ClassCatalog(SEASHIPS_NAMES)

    def test_object_inside_frame_ok(self):
        frame = Frame(0, 640, 480, 640 * 480 * 3, (make_proposal(),))
        validate_frame(frame, self.catalog)  # no raise

    def test_out_of_bounds_box(self):
        frame = Frame(0, 640, 480, 640 * 480 * 3,
                      (make_proposal(x0=600, y0=10, x1=700, y1=40),))
        with pytest.raises(OutOfBoundsBoxError):
            validate_frame(frame, self.catalog)

    def test_bad_class_index(self):
        frame = Frame(0, 640, 480, 640 * 480 * 3, (make_proposal(true_class=6),))
        with pytest.raises(BadClassIndexError):
            validate_frame(frame, self.catalog)
