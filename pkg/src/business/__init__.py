# This directory contains the business logic layer of the application
