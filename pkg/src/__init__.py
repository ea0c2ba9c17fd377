# src包初始化 