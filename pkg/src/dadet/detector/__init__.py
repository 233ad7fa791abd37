from dadet.detector.boxes import Detection, GroundTruthBox
from dadet.detector.model import Detector, FeaturePyramid, build_detector
from dadet.detector.loss import DetectionLossParts, detection_loss
from dadet.detector.decode import decode_and_nms

__all__ = [
    "Detection",
    "GroundTruthBox",
    "Detector",
    "FeaturePyramid",
    "build_detector",
    "DetectionLossParts",
    "detection_loss",
    "decode_and_nms",
]
