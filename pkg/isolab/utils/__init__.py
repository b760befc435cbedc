from isolab.utils.lab_log import LabLog, LabLogImpl

__all__ = ["LabLog", "LabLogImpl"]
